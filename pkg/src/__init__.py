# Sphere Metrics - Source Package
