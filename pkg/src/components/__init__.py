# UI components for the photon-pair source dashboard
