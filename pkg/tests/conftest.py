import threading
from contextlib import contextmanager

import pytest

from tacstep import MockGenerator, MockRuleTable, SimProver, SimProverTable, data_path
from tacstep.harness import Corpus
from tacstep.server import ServerConfig, make_server

EXAMPLE_STATE = "⊢ R ⊆ S → S ⊆ T → R ⊆ T"

EXAMPLE_SUGGESTIONS = [
    "exact subset_trans",
    "exact Set.Subset.trans",
    "tauto",
    "intro",
    "intros h1 h2",
]


@pytest.fixture(scope="session")
def demo_rules() -> MockRuleTable:
    return MockRuleTable.load(data_path("mock_rules.json"))


@pytest.fixture(scope="session")
def example_table() -> SimProverTable:
    return SimProverTable.load(data_path("example_table.json"))


@pytest.fixture(scope="session")
def demo_generator(demo_rules) -> MockGenerator:
    return MockGenerator(demo_rules)


@pytest.fixture(scope="session")
def demo_prover(example_table) -> SimProver:
    return SimProver(example_table)


@pytest.fixture(scope="session")
def corpus7() -> Corpus:
    return Corpus.generate(seed=7, count=50, max_depth=4, branching=3, distractors_per_state=4)


@contextmanager
def running_server(**config_kwargs):
    """Start a server on an ephemeral port; yields (base_url, service)."""
    config_kwargs.setdefault("bind", "127.0.0.1:0")
    httpd = make_server(ServerConfig(**config_kwargs))
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    host, port = httpd.server_address[:2]
    try:
        yield f"http://{host}:{port}", httpd.RequestHandlerClass.service
    finally:
        httpd.shutdown()
        httpd.server_close()


@pytest.fixture(scope="module")
def mock_server():
    """Module-scoped server: mock backend, simulated checking."""
    with running_server(
        backend=f"mock:{data_path('mock_rules.json')}",
        check=f"sim:{data_path('example_table.json')}",
    ) as (url, service):
        yield url
