"""
How many statistics?
====================

Closed-form bounds and enumerated index sets for the rectifier models,
side by side with the Portilla-Simoncelli bookkeeping.
"""

from wavetex.counting import alpha_breakdown, count_ps_statistics

for variant in ("S", "I", "L", "C", "C_reduced"):
    print(alpha_breakdown(variant, 5, 4, 4).as_text())
    print()

print(count_ps_statistics("gray", 4, 4, 3).as_text())
print(count_ps_statistics("gray", 5, 8, 4).as_text())
print(count_ps_statistics("color", 5, 8, 4).as_text())
