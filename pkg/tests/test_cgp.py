import math
import subprocess
import sys

import numpy as np
import pytest

from chainfocus.cgp.functions import (
    N_FUNCTIONS,
    USES_B,
    USES_PM,
    apply_function,
    apply_function_array,
)
from chainfocus.cgp.genome import (
    N_INPUTS,
    PM_SIGMA_BOUNDS,
    CgpGenome,
    GenomeError,
    MutationRates,
    crossover,
    decode,
    inactive_genes,
    mutate,
    neutral_variant,
    random_genome,
)
from chainfocus.cgp.render import (
    KERNELS,
    ImageSpec,
    eval_pixel,
    hsv_to_rgb,
    load_png_hsv,
    render,
    rgb_to_hsv,
    save_png,
)
from oracles import hsv_to_rgb_scalar


def identity_genome(n=5, src=0):
    return CgpGenome(func=[5] * n, conn_a=[0] * n, conn_b=[0] * n, pm=[0.0] * n,
                     pm_sigma=[16.0] * n, outputs=[src] * 3)


def chain_genome(n=100):
    """Every node reads its predecessor; output hangs off the last node."""
    return CgpGenome(func=[5] * n, conn_a=[max(0, i + 1) for i in range(n)], conn_b=[0] * n,
                     pm=[0.0] * n, pm_sigma=[16.0] * n, outputs=[n + 1] * 3)


# -- function set ---------------------------------------------------------

@pytest.mark.parametrize("k, a, b, expected", [
    (5, 100, 0, 155), (1, 12, 10, 14), (11, 10, 20, 15), (3, 200, 100, 45),
    (4, 10, 30, 20), (4, 30, 10, 20), (2, 6, 0, 2), (12, 10, 20, 255 * 11 / 21),
])
def test_function_examples(k, a, b, expected):
    pm = 3.0 if k == 2 else 0.0
    assert apply_function(k, a, b, pm) == pytest.approx(expected)


def test_function_9_and_10():
    assert apply_function(9, 3, 4, 0) == pytest.approx(5)
    assert apply_function(10, 10, 0, 3) == pytest.approx(10 % 4 + 252)


def test_bitwise_rounding_is_half_even():
    assert apply_function(1, 2.5, 0, 0) == 2.0
    assert apply_function(1, 3.5, 0, 0) == 4.0


def test_function_range_and_bad_gene():
    with pytest.raises(ValueError):
        apply_function(0, 1, 1, 1)
    with pytest.raises(ValueError):
        apply_function_array(14, np.zeros(2), np.zeros(2), 0.0)


def test_tan_poles_are_clamped():
    v = apply_function(8, math.pi / 2, 0, 0)
    assert 0 <= v <= 255


def test_array_matches_scalar(rng):
    a = rng.random(2000) * 255
    b = rng.random(2000) * 255
    for k in range(1, N_FUNCTIONS + 1):
        pm = float(rng.random() * 255)
        vec = apply_function_array(k, a, b, pm)
        ref = np.array([apply_function(k, x, y, pm) for x, y in zip(a, b)])
        assert np.allclose(vec, ref, atol=1e-7, rtol=0), k


@pytest.mark.skipif("compiled" not in KERNELS, reason="extension not built")
def test_compiled_scalar_matches_python(rng):
    kern = KERNELS["compiled"]
    for _ in range(5000):
        k = int(rng.integers(1, 14))
        a, b, pm = (float(x) for x in rng.random(3) * 255)
        assert kern.apply_function(k, a, b, pm) == apply_function(k, a, b, pm)


# -- genome ---------------------------------------------------------------

def test_random_genome_is_valid(rng):
    for _ in range(50):
        random_genome(rng).check()


def test_check_rejects_bad_genomes():
    g = identity_genome()
    with pytest.raises(GenomeError, match="feed-forward"):
        g.replace(conn_a=[0, 1, 2, 3, 6]).check()
    with pytest.raises(GenomeError):
        g.replace(func=[0, 5, 5, 5, 5]).check()
    with pytest.raises(GenomeError):
        g.replace(outputs=[0, 0, 7]).check()
    with pytest.raises(GenomeError):
        g.replace(pm=[300.0, 0, 0, 0, 0]).check()


def test_genome_is_read_only():
    g = identity_genome()
    with pytest.raises(ValueError):
        g.func[0] = 3


def test_serialisation_round_trip(rng):
    for _ in range(20):
        g = mutate(random_genome(rng), rng)
        back = CgpGenome.loads(g.dumps())
        assert back == g
        assert decode(back).canonical_form == decode(g).canonical_form
    with pytest.raises(GenomeError):
        CgpGenome.loads("5 0 0 0.0 16.0\n")


def test_decode_identity_program():
    ph = decode(identity_genome())
    assert len(ph.active_nodes) == 0
    img = render(ph, ImageSpec(8, 4))
    expected = np.arange(8) / 8 * 255
    for ch in range(3):
        assert np.array_equal(img[..., ch], np.tile(expected, (4, 1)))


def test_identity_at_half():
    assert eval_pixel(decode(identity_genome()), 0.5, 0.9) == (127.5, 127.5, 127.5)


def test_full_activity():
    assert len(decode(chain_genome()).active_nodes) == 100


def test_constant_subgraph_ignores_coordinates():
    # 255 - (pm & x) with pm = 0 is constant
    g = CgpGenome(func=[2, 5], conn_a=[0, 2], conn_b=[0, 0], pm=[0.0, 0.0],
                  pm_sigma=[1.0, 1.0], outputs=[3, 3, 3])
    ph = decode(g)
    assert eval_pixel(ph, 0.1, 0.2) == eval_pixel(ph, 0.9, 0.6) == (255.0, 255.0, 255.0)
    img = render(ph, ImageSpec(8, 8))
    assert np.all(img == 255.0)


def test_inactive_genes_do_not_change_canonical_form(rng):
    for _ in range(30):
        g = random_genome(rng)
        canon = decode(g).canonical_form
        for gene, i in inactive_genes(g)[:20]:
            arr = getattr(g, gene).copy()
            if gene == "func":
                arr[i] = arr[i] % N_FUNCTIONS + 1
            elif gene in ("conn_a", "conn_b"):
                arr[i] = (arr[i] + 1) % (i + N_INPUTS)
            else:
                arr[i] = min(arr[i] + 1.0, 255.0)
            assert decode(g.replace(**{gene: arr})).canonical_form == canon


def test_canonical_form_is_position_independent():
    a = CgpGenome(func=[5, 5, 5], conn_a=[0, 0, 1], conn_b=[0, 0, 0], pm=[0.0] * 3,
                  pm_sigma=[1.0] * 3, outputs=[4, 4, 4])
    b = CgpGenome(func=[5, 5, 5], conn_a=[1, 0, 0], conn_b=[0, 0, 0], pm=[0.0] * 3,
                  pm_sigma=[1.0] * 3, outputs=[2, 2, 2])
    assert decode(a).canonical_form == decode(b).canonical_form


def test_b_and_pm_only_matter_when_used():
    assert USES_B == {1, 3, 4, 9, 11, 12, 13}
    assert USES_PM == {2, 9, 10, 13}
    g = CgpGenome(func=[5], conn_a=[0], conn_b=[1], pm=[10.0], pm_sigma=[1.0], outputs=[2, 2, 2])
    assert ("conn_b", 0) in inactive_genes(g) and ("pm", 0) in inactive_genes(g)


def test_mutate_zero_is_identity(rng):
    g = random_genome(rng)
    assert mutate(g, rng, MutationRates(point=0.0, pm_step=False)) == g


def test_mutate_full_rate_keeps_invariants(rng):
    for _ in range(1000):
        g = mutate(random_genome(rng, 20), rng, MutationRates(point=1.0))
        g.check()
        assert np.all(g.pm_sigma >= PM_SIGMA_BOUNDS[0]) and np.all(g.pm_sigma <= PM_SIGMA_BOUNDS[1])


def test_pm_sigma_scales_by_fixed_factors(rng):
    g = random_genome(rng, 200, pm_sigma=16.0)
    m = mutate(g, rng, MutationRates(point=0.0))
    ratios = m.pm_sigma / g.pm_sigma
    assert set(np.round(ratios, 12)) == {1.15, 0.87}


def test_pm_clamped_at_upper_bound():
    g = identity_genome(1).replace(pm=[255.0], pm_sigma=[128.0])
    seen = set()
    for seed in range(50):
        m = mutate(g, np.random.default_rng(seed), MutationRates(point=0.0))
        assert 0.0 <= m.pm[0] <= 255.0
        seen.add(m.pm[0] == 255.0)
    assert True in seen


def test_neutral_variant_saturated():
    full = CgpGenome(func=[9], conn_a=[0], conn_b=[1], pm=[3.0], pm_sigma=[1.0], outputs=[2, 2, 2])
    assert inactive_genes(full) == []
    res = neutral_variant(full, np.random.default_rng(0))
    assert res.saturated and res.genome is full
    with pytest.raises(ValueError):
        neutral_variant(full, np.random.default_rng(0), steps=0)


def test_hundred_neutral_steps_render_identically(rng):
    g = random_genome(rng)
    variant = neutral_variant(g, rng, steps=100).genome
    assert variant != g
    assert np.array_equal(render(g), render(variant))


def test_active_mutation_changes_program(rng):
    g = random_genome(rng)
    base = decode(g).canonical_form
    changed = 0
    for _ in range(1000):
        v = neutral_variant(g, rng).genome
        m = mutate(v, rng, MutationRates(point=0.04, pm_step=False))
        changed += decode(m).canonical_form != base
    assert changed > 0


def test_crossover(rng):
    a, b = random_genome(rng), random_genome(rng)
    c = crossover(a, b, rng)
    c.check()
    assert np.all((c.func == a.func) | (c.func == b.func))
    with pytest.raises(GenomeError):
        crossover(a, random_genome(rng, 10), rng)


# -- rendering ------------------------------------------------------------

def test_one_pixel_image(rng):
    ph = decode(random_genome(rng))
    for backend in KERNELS:
        img = render(ph, ImageSpec(1, 1), backend=backend)
        assert img.shape == (1, 1, 3)
        assert np.allclose(img[0, 0], eval_pixel(ph, 0.0, 0.0), atol=1e-9)


def test_render_is_deterministic(rng):
    g = random_genome(rng)
    a, b = render(g), render(g)
    assert a.tobytes() == b.tobytes()


def test_render_range(rng):
    for _ in range(30):
        img = render(random_genome(rng))
        assert np.isfinite(img).all() and img.min() >= 0 and img.max() <= 255


@pytest.mark.skipif("compiled" not in KERNELS, reason="extension not built")
def test_compiled_render_equals_serial_pixel_loop(rng):
    spec = ImageSpec(12, 9)
    for _ in range(10):
        ph = decode(random_genome(rng))
        img = render(ph, spec, backend="compiled")
        ref = np.array([[eval_pixel(ph, c / spec.width, r / spec.height) for c in range(spec.width)]
                        for r in range(spec.height)])
        assert np.array_equal(img, ref)


def test_backends_agree(rng):
    spec = ImageSpec(32, 32)
    close = []
    for _ in range(20):
        ph = decode(random_genome(rng))
        a = render(ph, spec, backend="python")
        ref = np.array([[eval_pixel(ph, c / 32, r / 32) for c in range(32)] for r in range(32)])
        close.append(np.mean(np.abs(a - ref) < 1e-6))
    # numpy and libm trig may differ in the last ulp; tan/mod chains can amplify that
    assert np.mean(close) > 0.999


def test_backend_selection_fallback():
    code = ("import chainfocus.cgp.render as r; print(r.BACKEND, sorted(r.KERNELS))")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={"CHAINFOCUS_PURE_PYTHON": "1", "PATH": ""}, check=True)
    assert out.stdout.split()[0] == "python"


def test_hsv_to_rgb_against_colorsys(rng):
    hsv = rng.random((500, 3)) * 255
    rgb = hsv_to_rgb(hsv)
    for px, out in zip(hsv, rgb):
        ref = hsv_to_rgb_scalar(*px)
        assert np.all(np.abs(out.astype(int) - ref) <= 1)


def test_hsv_round_trip(rng):
    rgb = (rng.random((200, 3)) * 255).astype(np.uint8)
    assert np.array_equal(hsv_to_rgb(rgb_to_hsv(rgb)), rgb)


def test_png_round_trip(tmp_path, rng):
    img = render(random_genome(rng), ImageSpec(16, 16))
    p = tmp_path / "x.png"
    save_png(img, p)
    back = load_png_hsv(p)
    assert np.array_equal(hsv_to_rgb(back), hsv_to_rgb(img))
    save_png(img, tmp_path / "y.png")
    assert p.read_bytes() == (tmp_path / "y.png").read_bytes()


def test_image_spec_validation():
    with pytest.raises(ValueError):
        ImageSpec(0, 4)
