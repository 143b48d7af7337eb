# Configuration, errors, logging, validation and styling helpers
