"""Semi-supervised k-means / k-median clustering with same-cluster queries."""
