"""End-to-end smoke tests of the python bindings."""

import math

import pytest

lmcomb = pytest.importorskip("lmcomb")


def test_normalize_text():
    out = lmcomb.normalize_text(["Hoà bình. Ngày 2/9/1945"], rules=["tones", "numbers", "dates"])
    assert out[0] == ["hòa", "bình"]
    assert out[1][:4] == ["ngày", "mùng", "hai", "tháng"]
    assert lmcomb.fix_tone_placement("thuý") == "thúy"
    assert lmcomb.verbalize_integer(21) == ["hai", "mươi", "mốt"]
    assert lmcomb.format_thousands(446312) == "446k"


def test_train_query_roundtrip(tmp_path):
    sentences = lmcomb.synthesize_text(5, 300, 30)
    model = lmcomb.train(sentences, order=3)
    assert model.order == 3
    assert model.normalization_error() < 1e-9

    lp = model.logprob(["<s>"], sentences[0][0])
    assert lp < 0.0

    path = str(tmp_path / "model.arpa")
    model.write(path)
    back = lmcomb.ArpaModel.read(path)
    ppl_a = model.perplexity(sentences[:50]).ppl
    ppl_b = back.perplexity(sentences[:50]).ppl
    assert abs(ppl_a - ppl_b) / ppl_a < 1e-9


def test_prune_reduces_entries():
    model = lmcomb.train(lmcomb.synthesize_text(6, 2000, 60), order=3)
    pruned = model.prune(1e-5)
    assert pruned.total_entries() < model.total_entries()
    assert pruned.normalization_error() < 1e-9


def test_mixture_workflow():
    a = lmcomb.train(lmcomb.synthesize_text(7, 400, 30), order=2)
    b = lmcomb.train(lmcomb.synthesize_text(8, 400, 40), order=2)
    dev = lmcomb.synthesize_text(9, 60, 30)
    weights, trace = lmcomb.estimate_weights_em([a, b], dev)
    assert abs(sum(weights) - 1.0) < 1e-9
    assert all(trace[i + 1] <= trace[i] + 1e-12 for i in range(len(trace) - 1))

    merged = lmcomb.merge_static([a, b], weights)
    assert merged.normalization_error() < 1e-9

    ranked = lmcomb.rank_by_perplexity([a, b], dev)
    assert ranked[0][0] == 0  # dev text speaks component a's language


def test_acoustic_math():
    ll = lmcomb.gmm_emission_loglike([1.0], [[0.0]], [[1.0]], [0.0])
    assert abs(ll - (-0.5 * math.log(2 * math.pi))) < 1e-9
    pll = lmcomb.pseudo_loglike([[0.5, 0.25, 0.25]], [0.25, 0.25, 0.5], 0, 0)
    assert abs(pll - math.log(2)) < 1e-12
    priors = lmcomb.estimate_priors([0, 0, 1], 2)
    assert abs(priors[0] - 3 / 5) < 1e-12


def test_lattice_pipeline(tmp_path):
    fixture = lmcomb.make_fixture(str(tmp_path / "fix"), seed=9, utterances=10,
                                  train_sentences=500)
    lats = lmcomb.read_lattices(fixture["lattices"])
    assert len(lats) == 10

    corpus = [line.split() for line in open(fixture["general_corpus"], encoding="utf-8")]
    model = lmcomb.train(corpus, order=3)
    rescored = lats[0].rescore(model)
    best = rescored.best_path(lmwt=8.0)
    assert best.words
    posts = rescored.arc_posteriors(lmwt=8.0)
    assert all(0.0 < p <= 1.0 + 1e-9 for p in posts)
    hyps = rescored.nbest(lmwt=8.0, k=10)
    assert sum(h.posterior for h in hyps) <= 1.0 + 1e-6


def test_wer_and_combination():
    total, per_utt = lmcomb.corpus_wer(
        {"u1": ["a", "b"], "u2": ["c", "d"]},
        {"u1": ["a", "x"], "u2": ["c", "d"]},
    )
    assert total.errors == 1 and total.ref_words == 4
    assert len(per_utt) == 2

    combined = lmcomb.combine_nbest(
        {"u": [(["h1"], 0.6), (["h2"], 0.4)]},
        {"u": [(["h2"], 0.7), (["h3"], 0.3)]},
        w_general=0.5, w_conversation=0.5,
    )
    assert combined["u"] == ["h2"]

    best_idx, row = lmcomb.select_best_grid(
        [lmcomb.GridRow(7, 0.5, 0.5, 5.0), lmcomb.GridRow(8, 0.6, 0.4, 4.85)]
    )
    assert best_idx == 1 and row.lmwt == 8
