# Photon-pair source array toolkit
