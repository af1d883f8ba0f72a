"""Two compliant pair types that only a shape restriction on take-up can tell apart.

Both members always take up their own offer, so every observed cell is the
same whether the pair's take-up is driven by dominant, submodular or
supermodular best responses. The policy contrast below depends on how a member
reacts to a partner being forced into treatment, and its bounds shift with the
take-up restriction.
"""
from pairbounds.verify import check_counterexample, counterexample_estimand


def main():
    est = counterexample_estimand()
    print("estimand:", est.to_dict())
    for name, rec in check_counterexample().details[0]["intervals"].items():
        iv = rec["interval"]
        shown = "empty" if iv is None else f"[{iv[0]:.3f}, {iv[1]:.3f}]"
        print(f"{name:>18}: {shown:>16}  ({rec['columns']} columns)")


if __name__ == "__main__":
    main()
