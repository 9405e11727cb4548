"""Domain services: group algebra, the interval construction and its analyses."""
