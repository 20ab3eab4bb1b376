# coding: utf-8

# # Committee promotion against an all-broadcast baseline
#
# In the baseline every party promotes (kappa = n). With a committee of kappa
# parties the promotion traffic per view should shrink by about n / kappa,
# while the other phases stay quadratic.

# In[1]:

from evaba.harness import ExperimentConfig, run_experiment

rep = run_experiment(ExperimentConfig(n=10, kappa=4, runs=50, seed=0, baseline="all-broadcast"))
print(rep.table())


# In[2]:

d = rep.to_dict()
print("per-view bounds:", d["complexity"]["bounds"])
print("observed c:", d["complexity"]["observed_c"])
print("promotion ratio:", d["baseline"]["promotion_ratio"], "expected about", d["baseline"]["expected_ratio"])


# Promotion traffic grows linearly in kappa at fixed n.

# In[3]:

for kappa in (1, 2, 4, 7, 10):
    agg = run_experiment(ExperimentConfig(n=10, kappa=kappa, runs=20, seed=0)).to_dict()["aggregates"]
    print(f"kappa={kappa:>2}  promotion msgs per view {agg['promotion_per_view']:>7.1f}")
