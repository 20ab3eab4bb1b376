# coding: utf-8

# # One agreement instance, step by step
#
# Four parties, one of which may fail, agree on one of their initial values.
# The fifo scheduler delivers messages in send order, so the run is easy to
# follow in the trace.

# In[1]:

from collections import Counter

from evaba.checks import violations
from evaba.crypto import CryptoParams
from evaba.sim import AdversaryConfig, run

trace = run(CryptoParams.standard(4, seed=1), AdversaryConfig(scheduler="fifo", seed=1))
print(trace.status, "after", trace.views_to_decide, "view(s),", trace.ticks, "deliveries")
print({i: v.decode() for i, v in trace.decisions.items()})


# State transitions of party 1, in order.

# In[2]:

for line in trace.lines():
    if '"state"' in line and '"from":1,' in line:
        print(line)


# Message counts per phase. Promotion is the only phase whose size scales
# with the committee rather than with n.

# In[3]:

for phase, (msgs, payload, sig) in trace.phase_totals().items():
    print(f"{phase:<12} {msgs:>4} msgs  {payload:>6} payload bytes  {sig:>6} signature bytes")


# In[4]:

print("drops by reason:", Counter(ev[6] for ev in trace.events if ev[1] == "drop"))
print("violations:", violations(trace))
