# coding: utf-8

# # Byzantine behaviours
#
# Each behaviour wraps f parties. We run a handful of seeds per behaviour at
# n = 7 and look at outcomes, then zoom in on a party that tries to broadcast
# without being selected.

# In[1]:

from evaba.byzantine import BEHAVIORS
from evaba.checks import violations
from evaba.crypto import CryptoParams
from evaba.sim import AdversaryConfig, run

for behavior in BEHAVIORS:
    views, bad = [], 0
    for seed in range(30):
        tr = run(CryptoParams.standard(7, seed=seed), AdversaryConfig(behavior=behavior, seed=seed), record=False)
        views.append(tr.views_to_decide)
        bad += len(violations(tr))
    print(f"{behavior:<16} mean views {sum(views) / len(views):.2f}  worst {max(views)}  violations {bad}")


# A rogue broadcaster off the committee pushes all four steps with made-up
# certificates. Honest parties turn it away before touching any crypto.

# In[2]:

tr = run(CryptoParams.standard(7, seed=0), AdversaryConfig(behavior="rogue-broadcast", seed=0))
print("Byzantine:", tr.byzantine, "committees:", tr.committees)
print("rogue SENDs at honest parties:", tr.rogue_to_honest, "| drops:", tr.rogue_drops, "| ACKs:", tr.rogue_acked)


# The malformed-bytes fuzzer gets the same treatment one layer lower.

# In[3]:

tr = run(CryptoParams.standard(4, seed=3), AdversaryConfig(behavior="scripted", byzantine=(2,), seed=3))
malformed = sum(1 for ev in tr.events if ev[6] == "Malformed")
print(tr.status, "with", malformed, "undecodable payloads dropped")
