"""Environment settings and the YAML run configuration"""
