"""Regenerate special_reference.csv with 40-digit arithmetic (requires mpmath)."""
import mpmath as mp

mp.mp.dps = 40
xs = [1e-6, 1e-3, 0.1, 0.5, 1.0, 2.0, 2.5, 3.7, 5.0, 7.3, 10.0, 12.5, 19.9, 20.1,
      25.0, 33.3, 50.0, 77.7, 100.0, 250.0, 1000.0, 3141.59, 9999.0]
rows = []
for n in [0, 1, 2, 3, 5, 10, 40, 120]:
    for x in xs:
        rows.append(("J", n, x, mp.besselj(n, x)))
for two_nu in [-5, -3, -1, 1, 3, 5, 7]:
    for x in xs:
        if x < 1e-2:
            continue
        rows.append(("Jhalf", two_nu, x, mp.besselj(mp.mpf(two_nu) / 2, x)))
for l in [0, 1, 2, 3, 7, 15, 30, 60]:
    for x in xs:
        rows.append(("sj", l, x, mp.sqrt(mp.pi / (2 * x)) * mp.besselj(l + mp.mpf(1) / 2, x)))
for x in xs + [4.0, 1e4]:
    rows.append(("Si", 0, x, mp.si(x)))
with open("special_reference.csv", "w") as f:
    f.write("function,order,x,value\n")
    for name, order, x, v in rows:
        f.write(f"{name},{order},{mp.nstr(mp.mpf(x), 20)},{mp.nstr(v, 25)}\n")
