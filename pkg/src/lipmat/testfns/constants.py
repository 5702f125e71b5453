"""Native input bounds and output-range constants.

Input bounds follow the usual definitions in the Simon Fraser University
library of simulation test functions (borehole, OTL circuit, piston, wing
weight) and the speed-reducer formulation of the Golinski volume.  Output
ranges were computed once by multistart L-BFGS-B (scipy) over the native box
seeded from 2e5 uniform draws; they are the attained min and max, rounded
outward in the tenth significant digit.
"""

OTL_CIRCUIT_BOUNDS = [
    (50.0, 150.0),    # Rb1, resistance b1 [kOhm]
    (25.0, 70.0),     # Rb2, resistance b2 [kOhm]
    (0.5, 3.0),       # Rf, feedback resistance [kOhm]
    (1.2, 2.5),       # Rc1, collector resistance 1 [kOhm]
    (0.25, 1.2),      # Rc2, collector resistance 2 [kOhm]
    (50.0, 300.0),    # beta, current gain
]
OTL_CIRCUIT_RANGE = (2.603714845, 9.601342643)

PISTON_BOUNDS = [
    (30.0, 60.0),          # M, piston weight [kg]
    (0.005, 0.020),        # S, surface area [m^2]
    (0.002, 0.010),        # V0, initial gas volume [m^3]
    (1000.0, 5000.0),      # k, spring coefficient [N/m]
    (90000.0, 110000.0),   # P0, atmospheric pressure [N/m^2]
    (290.0, 296.0),        # Ta, ambient temperature [K]
    (340.0, 360.0),        # T0, filling gas temperature [K]
]
PISTON_RANGE = (0.1642288491, 1.199011224)

BOREHOLE_BOUNDS = [
    (0.05, 0.15),          # rw, borehole radius [m]
    (100.0, 50000.0),      # r, radius of influence [m]
    (63070.0, 115600.0),   # Tu, upper aquifer transmissivity [m^2/yr]
    (990.0, 1110.0),       # Hu, upper aquifer head [m]
    (63.1, 116.0),         # Tl, lower aquifer transmissivity [m^2/yr]
    (700.0, 820.0),        # Hl, lower aquifer head [m]
    (1120.0, 1680.0),      # L, borehole length [m]
    (9855.0, 12045.0),     # Kw, hydraulic conductivity [m/yr]
]
BOREHOLE_RANGE = (7.819676328, 309.5755877)

WING_WEIGHT_BOUNDS = [
    (150.0, 200.0),   # Sw, wing area [ft^2]
    (220.0, 300.0),   # Wfw, fuel weight in the wing [lb]
    (6.0, 10.0),      # A, aspect ratio
    (-10.0, 10.0),    # Lambda, quarter-chord sweep [deg]
    (16.0, 45.0),     # q, dynamic pressure at cruise [lb/ft^2]
    (0.5, 1.0),       # lambda, taper ratio
    (0.08, 0.18),     # t/c, aerofoil thickness to chord ratio
    (2.5, 6.0),       # Nz, ultimate load factor
    (1700.0, 2500.0), # Wdg, flight design gross weight [lb]
    (0.025, 0.08),    # Wp, paint weight [lb/ft^2]
]
WING_WEIGHT_RANGE = (123.2536717, 517.6650490)

# Continuous variables of the speed reducer; the number of pinion teeth
# (an integer in [17, 28]) is held at its lower bound.
GOLINSKI_BOUNDS = [
    (2.6, 3.6),   # face width [cm]
    (0.7, 0.8),   # module of teeth [cm]
    (7.3, 8.3),   # length of shaft 1 between bearings [cm]
    (7.3, 8.3),   # length of shaft 2 between bearings [cm]
    (2.9, 3.9),   # diameter of shaft 1 [cm]
    (5.0, 5.5),   # diameter of shaft 2 [cm]
]
GOLINSKI_RANGE = (2352.343276, 3861.669184)

# Ten samples of sin(3 pi x) on [-1, 1] whose bounds contain the function
# for the constant 8.39; picked by random search against a 1e5-point grid.
SINE1D_SAMPLES = [-0.7824, -0.5492, -0.4879, -0.4533, -0.2045, -0.1687,
                  0.1648, 0.2143, 0.4448, 0.9108]
SINE1D_CONSTANT = 8.39
