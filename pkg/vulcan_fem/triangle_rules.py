"""
vulcan_fem/triangle_rules.py

Symmetric (Dunavant) quadrature rules on the unit triangle, stored as symmetry orbits in
barycentric coordinates with weights normalized to sum 1.

Orbit kinds:
    ("S3", w): the centroid.
    ("S21", a, w): the 3 points (a, a, 1-2a) and permutations.
    ("S111", a, b, w): the 6 permutations of (a, b, 1-a-b).
"""

from typing import Dict, List, Tuple

import numpy as np

Orbit = Tuple

DUNAVANT_ORBITS: Dict[int, List[Orbit]] = {
    2: [
        ("S21", 1.0 / 6.0, 1.0 / 3.0),
    ],
    4: [
        ("S21", 0.445948490915964886320, 0.22338158967801146570),
        ("S21", 0.091576213509770743460, 0.10995174365532186764),
    ],
    6: [
        ("S21", 0.249286745170910, 0.116786275726379),
        ("S21", 0.063089014491502, 0.050844906370207),
        ("S111", 0.053145049844817, 0.310352451033784, 0.082851075618374),
    ],
    8: [
        ("S3", 0.144315607677787),
        ("S21", 0.459292588292723, 0.095091634267285),
        ("S21", 0.170569307751760, 0.103217370534718),
        ("S21", 0.050547228317031, 0.032458497623198),
        ("S111", 0.008394777409958, 0.263112829634638, 0.027230314174435),
    ],
    10: [
        ("S3", 0.090817990382754),
        ("S21", 0.485577633383657, 0.036725957756467),
        ("S21", 0.109481575485037, 0.045321059435528),
        ("S111", 0.141707219414880, 0.307939838764121, 0.072757916845420),
        ("S111", 0.025003534762686, 0.246672560639903, 0.028327242531057),
        ("S111", 0.009540815400299, 0.066803251012200, 0.009421666963733),
    ],
    12: [
        ("S21", 0.488217389773805, 0.025731066440455),
        ("S21", 0.439724392294460, 0.043692544538038),
        ("S21", 0.271210385012116, 0.062858224217885),
        ("S21", 0.127576145541586, 0.034796112930709),
        ("S21", 0.021317350453210, 0.006166261051559),
        ("S111", 0.115343494534698, 0.275713269685514, 0.040371557766381),
        ("S111", 0.022838332222257, 0.281325580989940, 0.022356773202303),
        ("S111", 0.025734050548330, 0.116251915907597, 0.017316231108659),
    ],
    14: [
        ("S21", 0.488963910362179, 0.021883581369429),
        ("S21", 0.417644719340454, 0.032788353544125),
        ("S21", 0.273477528308839, 0.051774104507292),
        ("S21", 0.177205532412543, 0.042162588736993),
        ("S21", 0.061799883090873, 0.014433699669777),
        ("S21", 0.019390961248701, 0.004923403602400),
        ("S111", 0.057124757403648, 0.172266687821356, 0.024665753212564),
        ("S111", 0.092916249356972, 0.336861459796345, 0.038571510787061),
        ("S111", 0.014646950055654, 0.298372882136258, 0.014436308113534),
        ("S111", 0.001268330932872, 0.118974497696957, 0.005010228838501),
    ],
}


def _expand(orbit: Orbit) -> Tuple[List[Tuple[float, float, float]], float]:
    kind = orbit[0]
    if kind == "S3":
        third = 1.0 / 3.0
        return [(third, third, third)], orbit[1]
    if kind == "S21":
        a, weight = orbit[1], orbit[2]
        c = 1.0 - 2.0 * a
        return [(a, a, c), (a, c, a), (c, a, a)], weight
    a, b, weight = orbit[1], orbit[2], orbit[3]
    c = 1.0 - a - b
    return [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)], weight


def expand_orbits(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Expands the orbits of one rule.

    Args:
        degree (int): Polynomial degree of the rule; must be a key of DUNAVANT_ORBITS.

    Returns:
        Tuple[np.ndarray, np.ndarray]: Barycentric points [n][3] and weights [n] summing to 1.
    """

    points, weights = [], []
    for orbit in DUNAVANT_ORBITS[degree]:
        orbit_points, weight = _expand(orbit)
        points.extend(orbit_points)
        weights.extend([weight] * len(orbit_points))
    return np.array(points, dtype=np.float64), np.array(weights, dtype=np.float64)
