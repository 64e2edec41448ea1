import numpy as np
import pytest

from sepgap import classical, locc
from sepgap.cli import load_fixture_text

SEED = 20240611
CORPUS_SIZE = 1000
CORPUS_DEPTH = 6
CORPUS_BRANCHING = 3

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Callable recording one pass/fail line per acceptance criterion."""
    lines = request.config.stash[_ACCEPTANCE]

    def _log(tag, ok, detail):
        line = f"{tag} {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return _log


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


def _fixture_protocols():
    out = {
        "projective-zz-2": locc.build_protocol_family("projective-zz", depth=2),
        "projective-zz-4-bob": locc.build_protocol_family("projective-zz", depth=4, first="B"),
        "partial-diagonal": locc.build_protocol_family(
            "partial-diagonal", thetas=[np.pi / 8, np.pi / 6, np.pi / 5, np.pi / 7]
        ),
        "identity": locc.build_protocol_family("identity"),
        "full-reveal-2": classical.compile_pc_to_locc(classical.full_reveal_protocol(2)),
        "uniform-coin": classical.compile_pc_to_locc(classical.uniform_coin_protocol()),
    }
    for name in ("projective-zz", "partial-diagonal"):
        out["bundled-" + name] = locc.protocol_from_json(load_fixture_text(name))
    for name in ("full-reveal-pc", "random-pc-seed7"):
        pc = classical.pc_from_json(load_fixture_text(name))
        out["bundled-" + name] = classical.compile_pc_to_locc(pc)
    return out


@pytest.fixture(scope="session")
def fixture_protocols():
    return _fixture_protocols()


@pytest.fixture(scope="session")
def random_corpus():
    """Seeded random protocols with their simulations, as (name, protocol, simulation)."""
    items = []
    for i in range(CORPUS_SIZE):
        proto = locc.random_protocol(
            SEED + i, depth=CORPUS_DEPTH, branching=CORPUS_BRANCHING
        )
        items.append((f"random-{SEED + i}", proto, locc.simulate_full(proto)))
    return items


@pytest.fixture(scope="session")
def corpus(random_corpus, fixture_protocols):
    fixtures = [
        (name, proto, locc.simulate_full(proto)) for name, proto in fixture_protocols.items()
    ]
    return random_corpus + fixtures
