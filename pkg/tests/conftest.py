import math

# Hand-evaluated reference for m = 2.  With h(cos s) = 8/3 + (16/3)cos^2 s the
# integrand of I(3) reduces to rationals in cos(2s); a partial-fraction split
# gives Q(3) = 7/4 - (3/4) sqrt(3), hence det T = 1 - Q(3)/3 = 5/12 + sqrt(3)/4.
Q3_M2 = 7.0 / 4.0 - 0.75 * math.sqrt(3.0)
DET_T_M2 = 5.0 / 12.0 + math.sqrt(3.0) / 4.0
