# Code construction, analysis and decoding
