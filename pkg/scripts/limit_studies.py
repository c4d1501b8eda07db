"""Limit studies beyond the acceptance sequences.

Shows how small ``b`` (resp. how large ``R``) must be before ``a(b)``
(resp. ``F(R)``) settles near its limit, for the cases where the standard
sequences ``b in {1e-2, 1e-3, 1e-4}`` and ``R in {1e2, 1e3, 1e4}`` do not.
"""
import numpy as np

from plbarrier.acceptance import RAMP
from plbarrier.barriers_sub import f_limit_study
from plbarrier.barriers_super import a_limit_study, build_super
from plbarrier.operators import laplacian, make_operator
from plbarrier.problem import InitialDatum, ProblemSpec

BUMP = InitialDatum.bump(0.0, 1.0, 1.0)
OPS = {"laplacian": laplacian(2), "p3": make_operator("p_laplacian", n=2, p=3)}


def a_table(name, sigma, bs):
    pb = ProblemSpec(OPS[name], sigma=sigma, chi=RAMP, h=BUMP)
    st = a_limit_study(pb, m=pb.nu, b_sequence=bs)
    print(f"a(b)  {name} sigma={sigma:g} case {st.case_tag} target {st.target:g}")
    for b, a, R in st.rows:
        print(f"    b={b:9.3g}  R={R:11.4g}  a={a:12.5g}  |a-target|={abs(a - st.target):.3g}")
    for n in st.notes:
        print("    " + n)


def F_table(name, sigma, Rs):
    pb = ProblemSpec(OPS[name], sigma=sigma, chi=RAMP, h=BUMP)
    st = f_limit_study(pb, Rs)
    print(f"F(R)  {name} sigma={sigma:g} case {st.case_tag} target {st.target:.6g}")
    for R, F, p in st.rows:
        rel = abs(F - st.target) / abs(st.target) if st.target else abs(F)
        print(f"    R={R:9.3g}  p={p:10.4g}  F={F:.6g}  rel.err={rel:.4f}")


def main():
    # k = 1: the first radius branch does not depend on b, so a - alpha ~ b * R^2
    a_table("laplacian", 0.0, [1e-2, 1e-4, 1e-20, 1e-60, 1e-95])
    a_table("laplacian", 0.5, [1e-2, 1e-4, 1e-20, 1e-60, 1e-95])
    pb = ProblemSpec(OPS["laplacian"], sigma=0.0, chi=RAMP, h=BUMP)
    w = build_super(pb, 1e-2)
    print(f"    k=1 sigma=0: R = {w.R:.4g}; a - alpha reaches 1e-3 near b = {1e-3 / (w.a / 1e-2):.3g}")
    # sigma > gamma with k = 1: R is again independent of b
    a_table("laplacian", 3.0, [1e-2, 1e-4, 1e-8, 1e-12])
    a_table("laplacian", 5.0, [1e-2, 1e-4, 1e-8, 1e-12])
    # k > 1, 0 < sigma <= 1: a ~ b^{sigma (gamma - 1)/(gamma - sigma)}
    a_table("p3", 0.5, [1e-2, 1e-4, 1e-6, 1e-8, 1e-10])
    # sigma = gamma - 1/2: relative error decays like 1/p with p ~ sqrt(R)
    Rs = list(np.logspace(2, 8, 7))
    F_table("laplacian", 1.5, Rs)
    F_table("p3", 2.5, Rs)
    F_table("laplacian", 0.5, Rs)


if __name__ == "__main__":
    main()
