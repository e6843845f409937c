# Database module: optional results store for experiment runs
