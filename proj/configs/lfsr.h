kind lfsr
sigma_bits 18
output_bits 0
taps 0 7 11 17
