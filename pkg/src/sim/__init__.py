# Channels and Monte Carlo simulation
