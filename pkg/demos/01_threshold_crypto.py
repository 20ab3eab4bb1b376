# coding: utf-8

# # Threshold signatures and the common coin
#
# A dealer hands every party a signing key and a coin key. Any `t = n - f`
# signature shares combine into one certificate; `f + 1` coin shares release
# the coin. The scheme here is an HMAC stand-in with the same interface as a
# pairing-based one, which is all the protocol logic needs.

# In[1]:

import itertools

from evaba.crypto import CryptoParams, InsufficientShares, deal
from evaba.messages import committee_tag

params = CryptoParams.standard(7, seed=42)
keys = deal(params)
scheme = keys.scheme()
print(params)


# Every party signs the same message. Any five of the seven shares give the
# same certificate.

# In[2]:

msg = b"hello committee"
shares = [keys.secret(i).sign_share(msg) for i in range(1, 8)]
sigs = {scheme.combine(sub, msg) for sub in itertools.combinations(shares, params.t)}
print(len(sigs), "distinct certificate(s) from", len(list(itertools.combinations(shares, params.t))), "subsets")
sig = sigs.pop()
print("valid:", scheme.threshold_validate(sig, msg), "| on another message:", scheme.threshold_validate(sig, b"other"))


# Four shares are not enough.

# In[3]:

try:
    scheme.combine(shares[:4], msg)
except InsufficientShares as e:
    print("refused:", e)


# The coin: three shares (f + 1) decide a committee of three out of seven,
# and any three shares give the same draw.

# In[4]:

tag = committee_tag(0, 1)
coin = [keys.secret(i).coin_share(tag) for i in range(1, 8)]
draws = {scheme.coin_toss(tag, sub, 7, 3) for sub in itertools.combinations(coin, 3)}
print("committee for view 1:", draws)
