# Stochastic detection, interference and chip-level experiments
