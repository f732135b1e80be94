"""Cell-prepared integrals shared by the integration and acceptance tests.

Every domain lies in the unit polydisc so that the local-field oracle,
which enumerates R^m, integrates the same set.
"""

FIXTURES = [
    ("vf x; ord(x) >= 0", None),
    ("vf x; ord(x) >= 0", "ord(x)"),
    ("vf x; ord(x) >= 2", None),
    ("vf x; ord(x) >= 0 & (exists rf w: w^2 = ac(x)) & ord(x) == 0 mod 2", None),
    ("vf x; ord(x) >= 0 & ord(x - 1) >= 1 & ac(x - 1) = 1", None),
    ("vf x; ord(x) >= 0 & ord(x^2 - 1) >= 1", None),
    ("vf x; ord(x) >= 0 & ord(x - t) >= 2", None),
    ("vf x; ord(x) >= 0 & ord(x*(x - 1)) <= 1", "ord(x)"),
    ("vf x; ord(x) >= 0 & ord(2*x + 1) >= 1", None),
    ("vf x; ord(x) >= 0 & ord(x) == 1 mod 3", "ord(x)"),
    ("vf x; ord(x) >= 0 & ac(x)^2 = 1 & ord(x) <= 3 & x != 0", None),
    ("vf x, y; ord(x) >= 0 & ord(y) >= 0 & ord(x) <= ord(y)", None),
    ("vf x, y; ord(x) >= 0 & ord(y) >= 0", "ord(x) + 2*ord(y)"),
    ("vf x, y; ord(x) >= 0 & ord(y) >= 0 & ord(x*y) <= 2 & ac(x) = ac(y)", None),
    ("vf x, y; ord(x) >= 0 & ord(y - 1) >= 1 & ord(x) + ord(y - 1) >= 2", None),
]

TWO_VARIABLE = [fx for fx in FIXTURES if fx[0].startswith("vf x, y")] + [
    ("vf x, y; ord(x) >= 0 & ord(y) >= 0 & ord(x) + 1 >= 2*ord(y)", "ord(y)"),
    ("vf x, y; ord(x - 1) >= 1 & ord(y) >= 0 & ord(x - 1) == ord(y) mod 2", None),
    ("vf x, y; ord(x) >= 0 & ord(y) >= 0 & (ord(x) < ord(y) | ac(y) = 1)", "ord(x)"),
]
