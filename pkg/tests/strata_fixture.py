# three sign-pattern triples per label, read off the enumeration of the strata
STRATA_FIXTURE = [
    ((0, 0, 0), 1), ((0, 0, 0.0), 1), ((-0.0, 0, 0), 1),
    ((0, 0, 0.3), 2), ((0, 0, -0.1), 2), ((0, 0, 1e-9), 2),
    ((-0.1, -0.2, 0), 3), ((-1, -1, 0), 3), ((-1e-6, -0.5, 0), 3),
    ((-0.1, -0.2, 0.1), 4), ((-0.3, -0.01, -0.2), 4), ((-1, -1, 1), 4),
    ((-0.1, 0, 0), 5), ((-0.5, 0, 0), 5), ((-1e-5, 0, 0), 5),
    ((-0.1, 0, 0.2), 6), ((-0.5, 0, -0.7), 6), ((-1e-5, 0, 1e-5), 6),
    ((-0.1, 0.2, 0.05), 7), ((-0.4, 0.1, 0), 7), ((-1, 1, -1), 7),
    ((0, -0.1, 0), 8), ((0, -0.9, 0), 8), ((0, -1e-7, 0), 8),
    ((0, -0.1, 0.4), 9), ((0, -0.9, -0.2), 9), ((0, -1e-7, 1e-7), 9),
    ((0, 0.2, 0.3), 10), ((0.3, 0, 0), 10), ((0.1, 0, -0.5), 10),
    ((0.1, -0.1, 0), 11), ((0.5, -0.2, 0.3), 11), ((1, -1, -1), 11),
]
