"""RSSI maximum-likelihood direction-of-arrival estimation for impulsive sources."""
