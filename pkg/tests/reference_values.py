"""Published cohort shapes, confusion counts and metric values used as golden data."""

COHORTS = ("Shanghai", "Hebei", "Spain")

# test set: cohort -> (positive subjects, positive images, negative subjects, negative images)
TEST_SHAPE = {
    "Shanghai": (29, 139, 99, 408),
    "Hebei": (27, 135, 161, 805),
    "Spain": (8, 28, 154, 624),
}

# development set, per cohort and class: (train subjects, train images, validation subjects, validation images)
DEV_SHAPE = {
    ("Shanghai", 1): (83, 290, 21, 77),
    ("Shanghai", 0): (272, 958, 70, 236),
    ("Hebei", 1): (14, 68, 6, 33),
    ("Hebei", 0): (0, 0, 0, 0),
    ("Spain", 1): (22, 96, 9, 36),
    ("Spain", 0): (119, 482, 41, 160),
}

# (scope, level) -> (tp, fn, fp, tn); level is "image", "max" or "mean"
CONFUSION = {
    ("Shanghai", "max"): (29, 0, 13, 86),
    ("Shanghai", "mean"): (25, 4, 3, 96),
    ("Shanghai", "image"): (99, 40, 22, 386),
    ("Hebei", "max"): (26, 1, 43, 118),
    ("Hebei", "mean"): (21, 6, 25, 136),
    ("Hebei", "image"): (100, 35, 130, 675),
    ("Spain", "max"): (6, 2, 12, 142),
    ("Spain", "mean"): (4, 4, 6, 148),
    ("Spain", "image"): (11, 17, 23, 601),
    ("Total", "max"): (61, 3, 68, 346),
    ("Total", "mean"): (50, 14, 34, 380),
    ("Total", "image"): (210, 92, 175, 1662),
}

# printed row percentages: (scope, level) -> ((P%, N%) of positives, (P%, N%) of negatives)
CONFUSION_PCT = {
    ("Shanghai", "max"): ((100, 0), (13.1, 86.9)),
    ("Shanghai", "mean"): ((86.2, 13.8), (3, 97)),
    ("Shanghai", "image"): ((71.2, 28.8), (5.4, 94.6)),
    ("Hebei", "max"): ((96.3, 3.7), (26.7, 73.3)),
    ("Hebei", "mean"): ((77.8, 22.2), (15.5, 84.5)),
    ("Hebei", "image"): ((74.1, 25.9), (16.1, 83.9)),
    ("Spain", "max"): ((75, 25), (7.8, 92.2)),
    ("Spain", "mean"): ((50, 50), (3.9, 96.1)),
    ("Spain", "image"): ((39.3, 60.7), (3.7, 96.3)),
    ("Total", "max"): ((95.3, 4.7), (16.4, 83.6)),
    ("Total", "mean"): ((78.1, 21.9), (8.2, 91.8)),
    ("Total", "image"): ((69.5, 30.5), (9.5, 90.5)),
}

# (scope, level) -> (sensitivity, specificity, accuracy, f1) as printed
METRICS = {
    ("Shanghai", "image"): (0.712, 0.946, 0.887, 0.762),
    ("Shanghai", "max"): (1.000, 0.869, 0.898, 0.817),
    ("Shanghai", "mean"): (0.862, 0.970, 0.945, 0.877),
    ("Hebei", "image"): (0.741, 0.839, 0.824, 0.548),
    ("Hebei", "max"): (0.963, 0.733, 0.766, 0.542),
    ("Hebei", "mean"): (0.778, 0.845, 0.835, 0.575),
    ("Spain", "image"): (0.393, 0.963, 0.938, 0.355),
    ("Spain", "max"): (0.750, 0.922, 0.914, 0.462),
    ("Spain", "mean"): (0.500, 0.961, 0.938, 0.444),
    ("Total", "image"): (0.695, 0.904, 0.875, 0.611),
    ("Total", "max"): (0.953, 0.836, 0.851, 0.632),
    ("Total", "mean"): (0.781, 0.918, 0.900, 0.676),
}

METRIC_TOLERANCE = 0.002
