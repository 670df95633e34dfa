# Copyright 2026 The sbfstore Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
import pytest

import sbfstore as sbf


@pytest.fixture(scope="module")
def world():
    p = sbf.derive_params(20, 4, 2, 6, beta=50)
    rng = sbf.RandomSource.seeded(1)
    vocab = sbf.tokens([f"kw{i}" for i in range(p.l)], p.n_bits)
    master, agent = sbf.setup(p, vocab, rng)
    return p, rng, vocab, master, agent, sbf.agent_keyring(master)


def test_published_parameters():
    p = sbf.derive_params(100, 10, 1, 15)
    assert p.m == 1443
    rep = sbf.overlap_report(p)
    assert rep["lambda"] == 142
    assert abs(rep["pr_varpi"] - 0.915) < 0.01
    assert abs(sbf.memory_mib(sbf.derive_params(100, 10, 20, 15)) - 880.554) < 1e-3
    assert sbf.parse_params("l=100\nr=10\nq=15\n") == p


def test_upload_search_remove_in_process(world):
    p, rng, vocab, master, agent, agent_kr = world
    zone, loc = sbf.make_token("zone0"), sbf.make_token("loc0")
    kr = sbf.register_user(master, vocab[:3], zone)
    idx = sbf.build_index(kr, loc, p, rng)
    assert idx.bf.popcount() > 0

    mi = sbf.MetaInfo()
    mi.pseudonym = sbf.make_token("alice")
    mi.server_id = sbf.make_token("ccs")
    mi.memory_index = sbf.make_token("0")
    mi.health = idx.keywords
    pkt = sbf.make_upload_packet(idx, mi, agent, zone, p, rng)

    store = sbf.StorageBloomFilter(p, zone)
    assert store.ingest(pkt) == pkt.filter(p).popcount()
    hits = store.search_location(sbf.keyword_positions(agent_kr, vocab[0], loc))
    assert [h.handle for h in hits] == [pkt.sealed.handle]
    assert sbf.open_record(agent, hits[0], p) == mi

    both = sbf.build_and_query(agent_kr, vocab[:2], loc, p)
    assert len(store.search_filter(both)) == 1

    plan = sbf.build_removal(idx, kr, vocab[0], loc, pkt.sealed.handle, p, rng)
    out = store.remove(plan.request)
    assert not out.warnings
    gone = store.search_location(sbf.keyword_positions(agent_kr, vocab[0], loc))
    assert all(h.handle != pkt.sealed.handle for h in gone)
    assert len(store.search_location(sbf.keyword_positions(agent_kr, vocab[1], loc))) == 1

    restored = sbf.StorageBloomFilter.restore(store.snapshot())
    assert restored.snapshot() == store.snapshot()


def test_errors_map_to_python(world):
    p, rng, vocab, master, agent, _ = world
    with pytest.raises(ValueError):
        sbf.register_user(master, [sbf.make_token("not in vocabulary")], sbf.make_token("z"))
    with pytest.raises(sbf.FormatError):
        sbf.UploadPacket.decode(b"\x01", p)
    with pytest.raises(ValueError):
        sbf.derive_params(0, 4, 1, 2)


def test_loopback_server(world):
    p, rng, vocab, master, agent, agent_kr = world
    zone, loc = sbf.make_token("zone1"), sbf.make_token("loc1")
    server = sbf.Server(p, [zone])
    server.start()
    try:
        kr = sbf.register_user(master, vocab[4:6], zone)
        idx = sbf.build_index(kr, loc, p, rng)
        mi = sbf.MetaInfo()
        mi.pseudonym = sbf.make_token("bob")
        mi.server_id = sbf.make_token("ccs")
        mi.memory_index = sbf.make_token("1")
        mi.health = idx.keywords
        pkt = sbf.make_upload_packet(idx, mi, agent, zone, p, rng)
        owner = sbf.Client.connect("127.0.0.1", server.port, sbf.Role.OWNER, p, rng)
        owner.upload(pkt)
        searcher = sbf.Client.connect("127.0.0.1", server.port, sbf.Role.AGENT, p, rng)
        recs = searcher.search_location(zone, sbf.keyword_positions(agent_kr, vocab[4], loc))
        assert sbf.open_record(agent, recs[0], p).pseudonym == mi.pseudonym
        with pytest.raises(sbf.ServerError, match="ZONE_UNKNOWN"):
            searcher.search_location(sbf.make_token("nope"), sbf.keyword_positions(agent_kr, vocab[4], loc))
    finally:
        server.stop()


def test_simulations_are_seeded():
    a = sbf.run_overlap_experiment(432, 6, 50, 1, [10, 20], 2000, 5)
    b = sbf.run_overlap_experiment(432, 6, 50, 1, [10, 20], 2000, 5)
    assert a == b
    assert a[1]["estimate"] >= a[0]["estimate"]
    p = sbf.derive_params(100, 10, 5, 15, beta=320)
    rows = sbf.run_overflow_experiment(p, 200, [320], 20, 3)
    assert rows[0]["estimate"] == 0.0
