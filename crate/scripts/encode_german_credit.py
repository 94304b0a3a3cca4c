"""Encode the categorical Statlog German credit table as 24 numeric covariates.

Ordered attributes keep their level number, unordered ones use the level
number as well except purpose, which gets five indicator columns. The label
(1 = good, 2 = bad) is the last column.

    python3 scripts/encode_german_credit.py data/german_credit.csv data/german_credit_numeric.txt
"""

import csv
import sys


def suffix(code, prefix_len):
    # "A34" with prefix 1 -> 4, "A121" with prefix 2 -> 1
    return int(code[1 + prefix_len :])


PURPOSES = ["A40", "A41", "A42", "A43", "A49"]


def encode(row):
    r = row
    out = [
        suffix(r["status_of_existing_checking_account"], 1),
        int(r["duration_in_month"]),
        suffix(r["credit_history"], 1),
        round(int(r["credit_amount"]) / 100 + 1e-9),
        suffix(r["savings_account/bonds"], 1),
        suffix(r["present_employment_since"], 1),
        int(r["installment_rate_in_percentage_of_disposable_income"]),
        suffix(r["personal_status_and_sex"], 1),
        suffix(r["other_debtors/guarantors"], 2),
        int(r["present_residence_since"]),
        suffix(r["property"], 2),
        int(r["age_in_years"]),
        suffix(r["other_installment_plans"], 2),
        suffix(r["housing"], 2),
        int(r["number_of_existing_credits_at_this_bank"]),
        suffix(r["job"], 2),
        int(r["number_of_people_being_liable_to_provide_maintenance_for"]),
        suffix(r["telephone"], 2),
        suffix(r["foreign_worker"], 2),
    ]
    out += [1 if r["purpose"] == p else 0 for p in PURPOSES]
    out.append(int(r["credit_risk"]))
    return out


def main(src, dst):
    with open(src, newline="") as f:
        rows = [encode(r) for r in csv.DictReader(f)]
    with open(dst, "w") as f:
        f.write("# Statlog (German Credit Data), UCI ML repository, CC BY 4.0\n")
        f.write("# encoded by scripts/encode_german_credit.py; label last (1 good, 2 bad)\n")
        for r in rows:
            f.write(" ".join(f"{v:4d}" for v in r) + "\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
