"""Quick end-to-end check of the pynholo extension."""
import json
import math

import pynholo as nh

chart = nh.Chart(["x1", "x2"], ["y1", "y2"])

f = nh.Field("x1^2*sin(y2)", chart)
assert abs(f.partial(["x1"]).eval([1.5, 0.0, 0.0, 0.3]) - 3.0 * 0.2955202066613396) < 1e-12

lag = nh.Lagrangian("exp(2*x1)*(y1^2 + y2^2)", chart)
p = [0.2, -0.1, 0.4, 0.7]
g = lag.metric(p)
assert abs(g[0][0] - math.exp(0.4)) < 1e-12 and g[0][1] == 0.0
print("semispray", lag.semispray(p))
print("N", lag.nconnection(p))
assert abs(lag.symplectic_form([1, 0, 0, 0], [1, 0, 0, 0], p)) < 1e-12

dm = lag.sasaki()
checks = dm.checks(p)
print("checks", checks)
assert all(v < 1e-8 for k, v in checks.items() if k != "levi_civita")
curv = dm.curvature(p)
assert curv["trace_residual"] < 1e-8

sol = nh.family_a()
res = sol.residuals([0.3, 0.2, 1.1, 1.5, 0.4])
print("family A residuals", res)
assert max(res.values()) < 1e-8
summary = sol.sweep(with_ricci=False)
print("family A sweep", summary)
assert summary["vacuum"] < 1e-6
assert sol.perturbed(0.1).sweep(with_ricci=False)["vacuum"] > 1e-3

k = nh.kahler_checks(1.5, "x3^2", [[0.1, 1.0, 1.2, 0.0], [-0.4, 1.5, 0.8, 0.0]])
print("kahler", k)
assert max(k.values()) < 1e-8

scene = "[chart]\nh = x1, x2\nv = y1, y2\n[lagrangian]\nL = y1^2 + y2^2\n"
report = json.loads(nh.run_scene("verify", scene))
assert report["pass"], report

print("smoke test ok")
