"""Farthest-in-future, the nested ranking it induces, and position sequences.

Run: python3 demos/01_rankings.py
"""

from myopic_paging.belady import BeladyRanking, simulate_fif, verify_nesting
from myopic_paging.posseq import check_repeat_property, realize_position_sequence

pages = list("abcabdacbd")
print("requests:", " ".join(pages))
for m in (1, 2, 3):
    _, faults = simulate_fif(pages, m)
    print(f"  FiF with {m} slot(s): {faults} faults")

# One ranking serves every cache size at once: FiF with m slots holds its first m pages.
rk = BeladyRanking(pages, list("abcd"))
print("\nranking after each request (position of the request before serving it):")
for p in pages:
    q, chain = rk.step()
    print(f"  {p} at {q}  chain {chain}  ->  {' '.join(rk.order)}")
print("nesting holds:", verify_nesting(pages, list("abcd"))[0])

# Which position sequences can happen at all?  Exactly those with the repeat property.
for h in ([2, 3, 4, 2, 3, 2, 3, 4, 5], [2, 4, 2, 4]):
    ok, witness = check_repeat_property(h)
    print(f"\npositions {h}: repeat property {'holds' if ok else 'fails at ' + str(witness)}")
    if ok:
        realized, universe = realize_position_sequence(h)
        print("  one trace producing it:", " ".join(realized))
