"""Grid refinement of the solver against the Cole-Hopf oracle.

The sup error should fall roughly like the square of the spacing.
"""
import time

from plbarrier.verification import cole_hopf_check


def main():
    prev = None
    for nr in (101, 201, 401, 801):
        t0 = time.perf_counter()
        err = cole_hopf_check(nr=nr)["sup_error"]
        rate = "" if prev is None else f"  ratio {prev / err:.2f}"
        print(f"nr={nr:4d}  sup error {err:.3e}  ({time.perf_counter() - t0:.1f}s){rate}")
        prev = err


if __name__ == "__main__":
    main()
