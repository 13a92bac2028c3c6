"""Acceptance gate: every criterion at its stated tolerance, one line each.

Criteria (tolerances pinned in sceneforge.verify):
  - render oracle: 500 random scenes (<= 20 splats) vs brute-force
    compositing, 1e-6 per pixel, < 5 s
  - gradient suite: analytic vs central finite differences for every
    parameter class, relative error < 1e-4, >= 50 configurations, < 60 s
  - disparity alignment: warps (a,b) in {0.5..2}x{-0.2..0.2} recovered to
    1e-3, post-alignment objective < 1e-6, < 10 s
  - poisson blend: constant-offset seam removed to < 1e-4, interior
    Laplacian preserved, < 10 s
  - sampler identities: w=1 fusion bit-equal, reverse involution, tau=0
    SDEdit identity, final frame == end view, all exact, < 5 s
  - visibility: brute-force argmax equivalence (<= 10 points x 4 videos),
    hard-mask partition, soft-band sums, < 5 s
  - reference constants present in the shipped defaults
  - end-to-end synthetic world: K=3, T=25, 64x64, 200 splats, 500/2000
    iterations; held-out PSNR > 25 dB at 3 probe times; no-embedding
    ablation strictly lower; < 15 min
"""

import pytest

from sceneforge import verify


def _report(result):
    print(f"[{'PASS' if result.passed else 'FAIL'}] {result.name}: {result.detail}")
    assert result.passed, f"{result.name}: {result.detail}"


def test_render_oracle():
    _report(verify.check_render_oracle(num_scenes=500, seed=0))


def test_gradient_suite():
    _report(verify.check_gradient_suite(num_configs=50, seed=0))


def test_eq2_alignment():
    _report(verify.check_alignment(seed=0))


def test_poisson_blend():
    _report(verify.check_poisson(seed=0))


def test_sampler_identities():
    _report(verify.check_sampler_identities(seed=0))


def test_visibility_oracle():
    _report(verify.check_visibility(seed=0))


def test_reference_constants():
    _report(verify.check_constants())


@pytest.mark.end_to_end
def test_end_to_end_synthetic_world():
    _report(verify.check_end_to_end(seed=0))
