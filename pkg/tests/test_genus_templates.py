"""Simulated genus templates keep their kink/straight/coil structure through the pipeline"""
import numpy as np
import pytest

import config
from analysis import analyze_centerline
from assembly import GENERA, genus_template, render_centerline
from compare import region_indices
from main import samples_per_segment


@pytest.fixture(scope="module")
def regions():
    """Per genus: (head, mid, tail) curvature values over the valid region indices"""
    head, mid, tail = region_indices()
    result = {}
    for genus in GENERA:
        spec = genus_template(genus)
        line = render_centerline(spec, samples_per_segment(config.SIMULATION_SAMPLES, len(spec.segments)))
        profile = analyze_centerline(line, trial_id=genus)
        assert profile.valid[list(head) + list(mid) + list(tail)].all()
        result[genus] = tuple(profile.curvature[list(indices)] for indices in (head, mid, tail))
    return result


@pytest.mark.parametrize("genus", ["Micrurus", "Oxyrhopus"])
def test_head_peak_stands_out_from_midsection(regions, genus):
    head, mid, _ = regions[genus]
    assert head.max() >= 2.0 * np.mean(mid)


def test_oxyrhopus_tail_is_nearly_straight(regions):
    assert np.mean(regions["Oxyrhopus"][2]) < 0.1 * np.mean(regions["Micrurus"][2])


def test_atractus_head_is_nearly_straight(regions):
    assert np.mean(regions["Atractus"][0]) < 0.1 * np.mean(regions["Micrurus"][0])


def test_coiled_tail_outweighs_midsection(regions):
    for genus in ("Atractus", "Micrurus"):
        _, mid, tail = regions[genus]
        assert np.mean(tail) > np.mean(mid)


@pytest.mark.parametrize("genus", ["Micrurus", "Oxyrhopus"])
def test_kink_sits_near_the_front_of_the_head(genus):
    spec = genus_template(genus)
    line = render_centerline(spec, samples_per_segment(config.SIMULATION_SAMPLES, len(spec.segments)))
    profile = analyze_centerline(line, trial_id=genus)
    head, _, _ = region_indices()
    peak = head[int(np.argmax(profile.curvature[list(head)]))]
    assert profile.arc_fraction[peak] < 0.1
