# %% [markdown]
# # Parabolic scaling and small-data global solutions
#
# If u solves the system then lam^{2 alpha_j} u_j(lam^2 t, lam x) does too, so
# rescaled data must blow up exactly lam^2 times sooner. Away from the
# supercritical regime small data live forever and decay like the heat kernel.

# %%
from lifespan_lab import InitialData, SystemParams, build_psi, compute_alpha, run

# %%
params = SystemParams((2, 3), n=1)
alpha = [float(a) for a in compute_alpha(params).alpha]
spec = build_psi(1)
lam = 2.0

base = run(InitialData("gaussian", (1.0, 1.0), 1.0), params, spec, 1e4, h0=0.01)
scaled_data = InitialData("gaussian", tuple(lam ** (2 * a) for a in alpha), 1 / lam)
scaled = run(scaled_data, params, spec, 1e4, h0=0.01)
T1, T2 = base.blowup.T_num, scaled.blowup.T_num
print(f"T = {T1:.6f}, rescaled T = {T2:.6f}, ratio {T2 / T1:.5f} (expect {1 / lam**2})")

# %% [markdown]
# ## n = 3, p = 4
# alpha = 1/3 is below n/2, so small data give global solutions with
# sup-norm decay t^{-3/2}.

# %%
params3 = SystemParams((4,), n=3)
print(compute_alpha(params3).criticality.value)
rep = run(InitialData("gaussian", (0.1,), 1.0), params3, build_psi(3), 100.0)
print("blew up:", rep.blowup.blew_up)
print("fitted decay exponent on [50, 100]:", rep.decay_exponents)
for i in range(0, rep.samples, rep.samples // 6):
    print(f"t={rep.t[i]:8.3f}  sup={rep.sup[0, i]:.4e}  M={rep.M_trace[i]:.4e}")
