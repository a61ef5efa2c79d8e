import json

import numpy as np
import pytest

from routechoice.files import (atomic_write_json, read_flows, read_network, read_od, read_weights,
                               write_flows, write_network, write_od)
from routechoice.network import NetworkError


def test_network_roundtrip(tmp_path, small_instance):
    inst, _ = small_instance
    write_network(tmp_path / "n.csv", inst.network)
    net = read_network(tmp_path / "n.csv")
    assert net.node_count == inst.network.node_count
    np.testing.assert_array_equal(net.tails, inst.network.tails)
    np.testing.assert_array_equal(net.costs, inst.network.costs)


def test_od_and_flows_roundtrip(tmp_path, small_instance):
    inst, _ = small_instance
    write_od(tmp_path / "od.csv", inst.od_pairs)
    write_flows(tmp_path / "f.csv", inst.measured)
    od = read_od(tmp_path / "od.csv")
    assert [(w.origin, w.destination, w.demand) for w in od] == \
        [(w.origin, w.destination, w.demand) for w in inst.od_pairs]
    fl = read_flows(tmp_path / "f.csv")
    np.testing.assert_array_equal(fl.values, inst.measured.values)


@pytest.mark.parametrize("text", [
    json.dumps([[1, 0, 0], [0.5, 0.5, 0]]),
    json.dumps({"weights": [[1, 0, 0], [0.5, 0.5, 0]]}),
    "1,0,0\n0.5,0.5,0\n",
])
def test_read_weights_formats(tmp_path, text):
    (tmp_path / "w").write_text(text)
    np.testing.assert_array_equal(read_weights(tmp_path / "w"), [[1, 0, 0], [0.5, 0.5, 0]])


def test_bad_network_file(tmp_path):
    (tmp_path / "n.csv").write_text("nodes,2\ncriteria,1\n0,0,1\n")
    with pytest.raises(NetworkError):
        read_network(tmp_path / "n.csv")


def test_atomic_json_is_sorted(tmp_path):
    atomic_write_json(tmp_path / "x.json", {"b": 1, "a": [1.5]})
    assert (tmp_path / "x.json").read_text().index('"a"') < (tmp_path / "x.json").read_text().index('"b"')
    assert not list(tmp_path.glob("*.tmp*"))
