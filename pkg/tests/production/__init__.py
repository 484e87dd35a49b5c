# Production quality tests
