"""
PASS Efficiency
Projected attainable speed space: a driving-efficiency metric, the lane-change
simulator that exercises it, and the rank calibration against travel time.
"""
