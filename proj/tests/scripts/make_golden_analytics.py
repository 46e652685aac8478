#!/usr/bin/env python3
"""Writes tests/data/golden/film1_analytics.json, the expected analytics
document for the synthetic film-1 prediction set built in the tests.

The prediction set has 10,000 faces: 6,829 Female (800 of them Over 50) and
3,171 Male (452 Over 50). Every gender distribution puts 0.97 on the winning
class and every age distribution 0.87 on the winning side, so the displayed
confidences are 97% and 87%. Percentages are computed here with exact
rational arithmetic, rounded half up to two decimals.

    python3 tests/scripts/make_golden_analytics.py
"""
import json
import os
from fractions import Fraction

ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
OUT = os.path.join(ROOT, "tests", "data", "golden", "film1_analytics.json")

N = 10000
FEMALE, FEMALE_OVER50, MALE_OVER50 = 6829, 800, 452


def hundredths(num, den):
    q = Fraction(num * 100, den)
    return int(q * 100 + Fraction(1, 2))


def pct(h):
    return h / 100


def pair(k1, h1, k2):
    return {k1: pct(h1), k2: pct(10000 - h1)}


female = hundredths(FEMALE, N)
over50 = hundredths(FEMALE_OVER50 + MALE_OVER50, N)
fo = hundredths(FEMALE_OVER50, N)
mo = hundredths(MALE_OVER50, N)

bias_counts = {"n": 10954, "actual_female": 5162, "predicted_female": 5027,
               "actual_over50": 1368, "predicted_over50": 1243}

doc = {
    "schema_version": 1,
    "film_id": "film-1",
    "n_faces": N,
    "gender": {"female_pct": pct(female), "male_pct": pct(10000 - female), "confidence_pct": 97.0},
    "age": {"over50_pct": pct(over50), "upto50_pct": pct(10000 - over50), "confidence_pct": 87.0},
    "intersection": {
        "female_over50_pct": pct(fo),
        "female_upto50_pct": pct(female - fo),
        "male_over50_pct": pct(mo),
        "male_upto50_pct": pct(10000 - female - mo),
    },
    "bias": {
        "validation_set": "fairface-val",
        "gender": {
            "n": bias_counts["n"],
            "actual": pair("female_pct", hundredths(bias_counts["actual_female"], bias_counts["n"]), "male_pct"),
            "predicted": pair("female_pct", hundredths(bias_counts["predicted_female"], bias_counts["n"]), "male_pct"),
        },
        "age": {
            "n": bias_counts["n"],
            "actual": pair("over50_pct", hundredths(bias_counts["actual_over50"], bias_counts["n"]), "upto50_pct"),
            "predicted": pair("over50_pct", hundredths(bias_counts["predicted_over50"], bias_counts["n"]), "upto50_pct"),
        },
    },
    "config_fingerprint": "sha256:0000000000000000",
}

os.makedirs(os.path.dirname(OUT), exist_ok=True)
with open(OUT, "w") as f:
    f.write(json.dumps(doc, indent=2) + "\n")
