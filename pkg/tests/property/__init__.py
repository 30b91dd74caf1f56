# Property-based tests
