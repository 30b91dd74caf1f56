# Hypothesis test strategies
