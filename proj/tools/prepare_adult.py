#!/usr/bin/env python3
"""Convert the raw UCI Adult census file into the categorical CSV that the
`fairkit` fixtures and the acceptance suite expect.

The raw file (usually ``adult.data``; ``adult.test`` works too) is not bundled
— download it from the UCI repository yourself. Each record is reduced to
eight coarse categorical columns:

    sex        Female | Male
    marital    Married | NeverMarried | Formerly
    agegroup   Under30 | Age30to44 | Age45plus
    region     US | Other            (native country)
    education  NoDiploma | HighSchool | SomeCollege | Degree
    workclass  Private | SelfEmployed | Government | Other
    hours      UpTo40 | Over40       (hours per week)
    income     >50K | <=50K

Identical rows are aggregated into a ``weight`` column. Missing values ('?')
fall into the Other buckets rather than being dropped, so the group income
rates of the raw file are preserved exactly.

Usage:
    python3 tools/prepare_adult.py adult.data [more files...] -o adult_prepared.csv
    FAIRKIT_ADULT=adult_prepared.csv ./build/acceptance
"""

import argparse
import collections
import csv
import sys

MARITAL = {
    "Married-civ-spouse": "Married",
    "Married-AF-spouse": "Married",
    "Married-spouse-absent": "Married",
    "Never-married": "NeverMarried",
    "Divorced": "Formerly",
    "Separated": "Formerly",
    "Widowed": "Formerly",
}

EDUCATION = {
    "Preschool": "NoDiploma",
    "1st-4th": "NoDiploma",
    "5th-6th": "NoDiploma",
    "7th-8th": "NoDiploma",
    "9th": "NoDiploma",
    "10th": "NoDiploma",
    "11th": "NoDiploma",
    "12th": "NoDiploma",
    "HS-grad": "HighSchool",
    "Some-college": "SomeCollege",
    "Assoc-voc": "SomeCollege",
    "Assoc-acdm": "SomeCollege",
    "Bachelors": "Degree",
    "Masters": "Degree",
    "Prof-school": "Degree",
    "Doctorate": "Degree",
}

WORKCLASS = {
    "Private": "Private",
    "Self-emp-not-inc": "SelfEmployed",
    "Self-emp-inc": "SelfEmployed",
    "Federal-gov": "Government",
    "State-gov": "Government",
    "Local-gov": "Government",
}

COLUMNS = ["sex", "marital", "agegroup", "region", "education", "workclass", "hours", "income"]

# 0-based field positions in the raw UCI file.
AGE, WORK, EDU, MARITAL_F, SEX, HOURS, COUNTRY, INCOME = 0, 1, 3, 5, 9, 12, 13, 14


def bucket(fields):
    age = int(fields[AGE])
    agegroup = "Under30" if age < 30 else ("Age30to44" if age < 45 else "Age45plus")
    marital = MARITAL.get(fields[MARITAL_F])
    education = EDUCATION.get(fields[EDU])
    if marital is None or education is None:
        raise ValueError(f"unrecognized marital/education value: "
                         f"{fields[MARITAL_F]!r} / {fields[EDU]!r}")
    return (
        fields[SEX],
        marital,
        agegroup,
        "US" if fields[COUNTRY] == "United-States" else "Other",
        education,
        WORKCLASS.get(fields[WORK], "Other"),
        "UpTo40" if int(fields[HOURS]) <= 40 else "Over40",
        fields[INCOME].rstrip("."),
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("inputs", nargs="+", help="raw UCI file(s): adult.data / adult.test")
    parser.add_argument("-o", "--output", required=True, help="prepared CSV to write")
    args = parser.parse_args()

    counts = collections.Counter()
    read = 0
    for path in args.inputs:
        with open(path, newline="", encoding="utf-8") as handle:
            for record in csv.reader(handle, skipinitialspace=True):
                if not record or record[0].startswith("|"):  # blank or comment line
                    continue
                if len(record) != 15:
                    raise SystemExit(f"{path}: expected 15 fields, got {len(record)}: {record}")
                read += 1
                counts[bucket(record)] += 1

    if not counts:
        raise SystemExit("no records found")

    with open(args.output, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(COLUMNS + ["weight"])
        for key in sorted(counts):
            writer.writerow(list(key) + [counts[key]])

    by_sex = collections.Counter()
    high = collections.Counter()
    for key, weight in counts.items():
        by_sex[key[0]] += weight
        if key[-1] == ">50K":
            high[key[0]] += weight
    print(f"{read} records -> {len(counts)} distinct rows -> {args.output}", file=sys.stderr)
    for sex in sorted(by_sex):
        rate = high[sex] / by_sex[sex]
        print(f"  Pr(income>50K | sex={sex}) = {rate:.4f} ({high[sex]}/{by_sex[sex]})",
              file=sys.stderr)


if __name__ == "__main__":
    main()
