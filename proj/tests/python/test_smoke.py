import filecmp
import subprocess

import pytest


def write_vertical(path, sentences):
    with open(path, "w") as f:
        for sent in sentences:
            for word, tag in sent:
                f.write(f"{word}\t{tag}\n")
            f.write("\n")


@pytest.fixture()
def toy_path(tmp_path):
    # Three interleaved "syntactic" classes with a couple of ambiguous types.
    sents = []
    words = {
        0: ["det0", "det1"],
        1: ["noun0", "noun1", "noun2", "mix01"],
        2: ["verb0", "verb1", "mix01"],
    }
    import random

    rng = random.Random(7)
    for _ in range(60):
        sent = []
        tag = 0
        for _ in range(rng.randint(4, 9)):
            sent.append((rng.choice(words[tag]), f"T{tag}"))
            tag = (tag + 1) % 3
        sents.append(sent)
    path = tmp_path / "toy.txt"
    write_vertical(path, sents)
    return str(path)


def test_corpus_reading(core, toy_path):
    corpus = core.Corpus.read_vertical(toy_path)
    assert corpus.num_sentences == 60
    assert corpus.num_tokens > 200
    assert corpus.has_gold()
    word = corpus.lookup("det0")
    assert word is not None
    assert corpus.frequency(word) == len(corpus.sites_of_type(word))


def test_train_and_metrics(core, toy_path):
    corpus = core.Corpus.read_vertical(toy_path)
    result = core.train(corpus, tags=3, sampler="lex", particles=5, iterations=40, seed=3)
    assert len(result["tags"]) == corpus.num_sentences
    assert len(result["diagnostics"]) == 40
    assert result["m1"] >= 0.5  # easy corpus; should beat the majority baseline
    assert 1.0 <= sum(len(c) for c in result["lexicon"]) / corpus.num_types <= 3.0

    flat_pred = [t for sent in result["tags"] for t in sent]
    flat_gold = [g for sent in corpus.gold for g in sent]
    assert core.many_to_one(flat_pred, flat_gold) == pytest.approx(result["m1"])
    assert core.many_to_one(flat_gold, flat_gold) == pytest.approx(1.0)
    assert 0.0 <= core.v_measure(flat_pred, flat_gold) <= 1.0

    classes = core.extract_classes(result["tags"], corpus)
    table = core.zipf_table(classes)
    assert sum(count for _, count, _ in table) == corpus.num_types
    # Observed tags stay inside the committed classes.
    for observed, committed in zip(classes, result["lexicon"]):
        assert set(observed) <= set(committed)


def test_train_determinism(core, toy_path):
    corpus = core.Corpus.read_vertical(toy_path)
    a = core.train(corpus, tags=3, particles=4, iterations=8, seed=11)
    b = core.train(corpus, tags=3, particles=4, iterations=8, seed=11)
    assert a["tags"] == b["tags"]
    assert a["lexicon"] == b["lexicon"]


def test_cli_round_trip(core, cli_path, toy_path, tmp_path):
    out = tmp_path / "run"
    cmd = [
        cli_path, "train", "--corpus", toy_path, "--format", "vertical",
        "--tags", "3", "--iterations", "10", "--particles", "5", "--seed", "5",
        "--out", str(out),
    ]
    subprocess.run(cmd, check=True, capture_output=True)
    for suffix in (".tags", ".lexicon.tsv", ".diag", ".ckpt"):
        assert (tmp_path / f"run{suffix}").exists()

    # Same seed twice: identical artifacts.
    out2 = tmp_path / "run2"
    cmd2 = list(cmd)
    cmd2[-1] = str(out2)
    subprocess.run(cmd2, check=True, capture_output=True)
    assert filecmp.cmp(f"{out}.tags", f"{out2}.tags", shallow=False)
    assert filecmp.cmp(f"{out}.lexicon.tsv", f"{out2}.lexicon.tsv", shallow=False)

    # Evaluating gold against itself scores M-1 = 1.
    proc = subprocess.run(
        [cli_path, "eval", "--pred", f"{out}.tags", "--gold", toy_path,
         "--format", "vertical"],
        check=True, capture_output=True, text=True)
    metrics = dict(line.split() for line in proc.stdout.splitlines() if line)
    assert 0.0 <= float(metrics["m1"]) <= 1.0

    gold_vs_gold = subprocess.run(
        [cli_path, "eval", "--pred", toy_path, "--gold", toy_path,
         "--format", "vertical"],
        check=True, capture_output=True, text=True)
    metrics = dict(line.split() for line in gold_vs_gold.stdout.splitlines() if line)
    assert float(metrics["m1"]) == pytest.approx(1.0)

    # Analysis artifacts.
    subprocess.run(
        [cli_path, "analyze", "--assignment", f"{out}.tags", "--corpus", toy_path,
         "--format", "vertical", "--out", str(tmp_path / "ana")],
        check=True, capture_output=True)
    assert (tmp_path / "ana.classes.tsv").exists()
    assert (tmp_path / "ana.zipf.tsv").exists()

    # Malformed prediction file: nonzero exit.
    bad = tmp_path / "bad.tags"
    bad.write_text("mismatched\tX\n\n")
    proc = subprocess.run(
        [cli_path, "eval", "--pred", str(bad), "--gold", toy_path, "--format", "vertical"],
        capture_output=True)
    assert proc.returncode != 0


def test_cli_resume_matches_uninterrupted(core, cli_path, toy_path, tmp_path):
    base = [
        cli_path, "train", "--corpus", toy_path, "--format", "vertical",
        "--tags", "3", "--iterations", "12", "--particles", "4", "--seed", "9",
    ]
    full = tmp_path / "full"
    subprocess.run(base + ["--out", str(full)], check=True, capture_output=True)

    part = tmp_path / "part"
    subprocess.run(
        base[:6] + ["--tags", "3", "--iterations", "6", "--particles", "4", "--seed", "9",
                    "--out", str(part)],
        check=True, capture_output=True)
    resumed = tmp_path / "resumed"
    subprocess.run(
        base + ["--out", str(resumed), "--resume", f"{part}.ckpt"],
        check=True, capture_output=True)
    assert filecmp.cmp(f"{full}.tags", f"{resumed}.tags", shallow=False)
    assert filecmp.cmp(f"{full}.lexicon.tsv", f"{resumed}.lexicon.tsv", shallow=False)
