import pytest

from rachtree.config import SchemeConfig, SystemConfig
from rachtree.engine.simulator import run_scenario, scripted_chooser

# Six devices, four preambles A..D = 0..3, one RAO per frame at subframe 0.
# Positions index the offered set: the full preamble list at a RAO, the
# group's two preambles at a TRAO.
SPLIT_EXAMPLE_SCRIPT = {
    0: [0, 0, 0],  # A, then A again in TRAO1, then A in TRAO2
    1: [0, 0, 1],  # A, A, then B
    2: [3, 0],     # D, then C in TRAO1
    3: [3, 1],     # D, then D
    4: [2, 0],     # C, then C in TRAO2
    5: [2, 1],     # C, then D
}


def split_example_config():
    sys = SystemConfig(n_preambles=4, p_error=0.0)
    scheme = SchemeConfig.tree(2, raos_per_frame=1, rao_offset=0, trao_subframes_per_frame=9)
    return sys, scheme


def run_split_example(seed=1):
    sys, scheme = split_example_config()
    return run_scenario(sys, scheme, 6, seed, chooser=scripted_chooser(SPLIT_EXAMPLE_SCRIPT))


@pytest.fixture
def split_example_trace():
    return run_split_example()
