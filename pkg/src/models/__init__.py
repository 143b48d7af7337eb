# Physics models of one photon-pair source
