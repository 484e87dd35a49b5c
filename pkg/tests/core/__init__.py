# Core requirements tests
