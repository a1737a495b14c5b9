"""Full counting statistics and theoretical clock bounds."""
