import pytest
import torch

from pyrgbd.models.fusion import (
    AddConvFusion,
    AdditiveFusion,
    CdaModule,
    FusionShapeError,
    build_fusion,
    joint_consistency_product,
    joint_difference_map,
)


def _scalar(value: float) -> torch.Tensor:
    return torch.tensor([[[value]]])


@pytest.fixture
def identity_cda():
    return CdaModule(1, identity=True)


def test_hand_evaluated_identity_algebra(identity_cda):
    """F_A=2, F_B=3, S=1: JC 6, enhancement 17, JD 1, output 18."""
    f_a, f_b, gate = _scalar(2.0), _scalar(3.0), _scalar(1.0)

    out = identity_cda(f_a, f_b, gate, return_intermediates=True)

    assert out.jc.item() == 6.0
    assert out.jc_ab.item() == 17.0
    assert out.jd.item() == 1.0
    assert out.fused.item() == 18.0


def test_equal_inputs_under_full_gate(identity_cda):
    """F_A=F_B=1, S=1: JC 1, enhancement 4, JD 0, output 4."""
    x = _scalar(1.0)

    out = identity_cda(x, x, _scalar(1.0), return_intermediates=True)

    assert out.jc.item() == 1.0
    assert out.jc_ab.item() == 4.0
    assert out.jd.item() == 0.0
    assert out.fused.item() == 4.0


def test_consistency_enhance_examples(identity_cda):
    assert identity_cda.consistency_enhance(_scalar(6.0), _scalar(2.0), _scalar(3.0)).item() == 17.0
    zeros = torch.zeros(1, 3, 3)
    assert torch.equal(identity_cda.consistency_enhance(zeros, zeros, zeros), zeros)


def test_zero_gate_nullity():
    """With S = 0 both pre-conv intermediates vanish for any inputs."""
    torch.manual_seed(0)
    f_a, f_b = torch.randn(2, 4, 6, 6), torch.randn(2, 4, 6, 6)
    gate = torch.zeros(2, 1, 6, 6)

    assert torch.count_nonzero(joint_consistency_product(f_a, f_b, gate)) == 0
    assert torch.count_nonzero(joint_difference_map(f_a, f_b, gate)) == 0


def test_zero_feature_and_difference_nullity():
    torch.manual_seed(1)
    f = torch.rand(3, 5, 5)
    gate = torch.rand(1, 5, 5)

    assert torch.count_nonzero(joint_consistency_product(torch.zeros_like(f), f, gate)) == 0
    assert torch.count_nonzero(joint_difference_map(f, f.clone(), gate)) == 0


def test_identity_mode_is_symmetric_in_a_and_b():
    torch.manual_seed(2)
    cda = CdaModule(4, identity=True)
    f_a, f_b = torch.rand(2, 4, 5, 5), torch.rand(2, 4, 5, 5)
    gate = torch.rand(2, 1, 5, 5)

    torch.testing.assert_close(cda(f_a, f_b, gate), cda(f_b, f_a, gate))


def test_shape_preservation():
    torch.manual_seed(3)
    cda = CdaModule(8)
    f_a, f_b = torch.rand(2, 8, 7, 9), torch.rand(2, 8, 7, 9)
    gate = torch.rand(2, 1, 7, 9)

    out = cda(f_a, f_b, gate, return_intermediates=True)

    for tensor in out:
        assert tensor.shape == f_a.shape


def test_shape_mismatch_lists_shapes():
    cda = CdaModule(2)
    with pytest.raises(FusionShapeError, match=r"\(1, 2, 4, 4\).*\(1, 2, 4, 5\)"):
        cda(torch.rand(1, 2, 4, 4), torch.rand(1, 2, 4, 5), torch.rand(1, 1, 4, 4))
    with pytest.raises(FusionShapeError, match="gate"):
        cda(torch.rand(1, 2, 4, 4), torch.rand(1, 2, 4, 4), torch.rand(1, 2, 4, 4))


@pytest.mark.parametrize("operation", ["jc", "enhance", "jd", "cda"])
def test_gradients_match_finite_differences(operation):
    """Every CDA operation passes a float64 gradient check on a 4-channel 5x5 instance."""
    torch.manual_seed(4)
    cda = CdaModule(4).double()
    f_a = torch.rand(1, 4, 5, 5, dtype=torch.float64, requires_grad=True)
    f_b = torch.rand(1, 4, 5, 5, dtype=torch.float64, requires_grad=True)
    gate = torch.rand(1, 1, 5, 5, dtype=torch.float64, requires_grad=True)

    functions = {
        "jc": lambda a, b, s: cda.joint_consistency(a, b, s),
        "enhance": lambda a, b, s: cda.consistency_enhance(a * s, a, b),
        "jd": lambda a, b, s: cda.joint_difference(a, b, s),
        "cda": lambda a, b, s: cda(a, b, s),
    }

    assert torch.autograd.gradcheck(
        functions[operation], (f_a, f_b, gate), eps=1e-6, atol=1e-6, rtol=1e-4
    )


def test_abs_subgradient_at_zero_is_zero():
    f = torch.rand(1, 2, 3, 3, requires_grad=True)
    joint_difference_map(f, f.detach().clone(), torch.ones(1, 1, 3, 3)).sum().backward()

    assert torch.count_nonzero(f.grad) == 0


def test_build_fusion_variants():
    assert isinstance(build_fusion(4, use_jc=True, use_jd=False), CdaModule)
    assert isinstance(build_fusion(4, False, False, fallback="add"), AdditiveFusion)
    assert isinstance(build_fusion(4, False, False, fallback="add_conv"), AddConvFusion)
    with pytest.raises(ValueError):
        build_fusion(4, False, False, fallback="concat")


def test_add_conv_matches_full_cda_parameter_count():
    count = lambda module: sum(p.numel() for p in module.parameters())

    assert count(AddConvFusion(16)) == count(CdaModule(16))


def test_calls_are_counted():
    cda = CdaModule(1, identity=True)
    cda(_scalar(1.0), _scalar(1.0), _scalar(1.0))
    cda(_scalar(1.0), _scalar(1.0), _scalar(1.0))
    assert cda.calls == 2

    cda.reset_counters()
    assert cda.calls == 0
