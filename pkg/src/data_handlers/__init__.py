# File input and output: coefficient files, run configurations, result tables
