"""Compare the greedy scheduler with brute-force enumeration on small random
rounds, then squeeze the relay link until the two part ways."""

from dataclasses import replace

from relayfl import EnergyLedger, SystemParams, schedule_greedy, solve_exact
from relayfl.harness import random_instance, run_oracle_check
from relayfl.topology import Device, Point2D

report = run_oracle_check(300, 8, seed=11)
print("unit-mean relay link: %d mismatches out of %d" % (report.mismatch_count, 300))

# With a weak relay-to-PS link the relay can carry only a few devices. The
# greedy scan fills the relay in priority order and never tries to move a
# high-priority device to its direct link to make room.
weak = replace(SystemParams(), fn_mag2=2.83e-6)
misses = 0
for n in range(300):
    devices, ledger, t, p = random_instance([11, n], 8, weak)
    if solve_exact(devices, ledger, t, p).best_count > schedule_greedy(devices, ledger, t, p).scheduled_count:
        misses += 1
print("weak relay link:      %d mismatches out of %d" % (misses, 300))

# smallest such case, built by hand
p = replace(SystemParams(), fn_mag2=5e-7)
pair = [Device(0, Point2D(1, 1), 5.0, d=30, r=8), Device(1, Point2D(1, 1), 5.0, d=95, r=20)]
ledger = EnergyLedger.fresh(2)
g = schedule_greedy(pair, ledger, 0, p)
x = solve_exact(pair, ledger, 0, p).best_schedule
print()
print("greedy:     direct", sorted(g.direct_set), "relay", sorted(g.relay_set))
print("exhaustive: direct", sorted(x.direct_set), "relay", sorted(x.relay_set))
