"""Liquid time-constant networks and continuous-time RNN baselines."""
