"""Domain embedding network: two convolutional encoders producing bounded
Gaussian parameters, reparameterized sampling, three deconvolutional decoders
reconstructing the face mask / face part / landmark image, and the small MLP
classifiers that push encoded latents toward the standard normal prior.

Layers are registered under stable row ids ("1-a" .. "2-f") that double as
checkpoint key components.
"""

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from .layers import SameConv2d, deconv2d, halved, nhwc_shape

EPS = 1e-7  # clamp for every log argument

ENCODER_WIDTHS = (32, 64, 128, 128, 128)
DECODER_WIDTHS = (128, 64, 32, 16)
LEAKY_SLOPE = 0.2


def clamped_log(p):
    return torch.log(torch.clamp(p, EPS, 1.0 - EPS))


@dataclass
class GaussianParams:
    """Sigmoid-bounded mean and standard deviation, each (N, latent_dim)."""

    mu: torch.Tensor
    sigma: torch.Tensor


def scaled(width, div):
    return max(1, width // div)


class DomainEncoder(nn.Module):
    """Five stride-2 4x4 convolutions, then two sigmoid dense heads."""

    def __init__(self, resolution, width_div=1, latent_dim=256, in_channels=3):
        super().__init__()
        widths = [scaled(c, width_div) for c in ENCODER_WIDTHS]
        rows = {}
        prev = in_channels
        for label, c in zip(("1-a", "1-b", "1-c", "1-d", "1-e"), widths):
            rows[label] = SameConv2d(prev, c, 4, stride=2)
            prev = c
        flat = widths[-1] * halved(resolution, 5) ** 2
        rows["1-f"] = nn.Linear(flat, latent_dim)
        rows["1-g"] = nn.Linear(flat, latent_dim)
        self.rows = nn.ModuleDict(rows)
        self.resolution = resolution
        self.latent_dim = latent_dim

    def forward(self, x, trace=None):
        if x.shape[-1] != self.resolution or x.shape[-2] != self.resolution:
            raise ValueError(
                f"encoder built for {self.resolution}^2 input, got {tuple(x.shape)}")
        for label in ("1-a", "1-b", "1-c", "1-d", "1-e"):
            x = F.leaky_relu(self.rows[label](x), LEAKY_SLOPE)
            if trace is not None:
                trace[label] = nhwc_shape(x)
        x = x.flatten(1)
        mu = torch.sigmoid(self.rows["1-f"](x))
        sigma = torch.sigmoid(self.rows["1-g"](x))
        if trace is not None:
            trace["1-f"] = tuple(mu.shape)
            trace["1-g"] = tuple(sigma.shape)
        return GaussianParams(mu=mu, sigma=sigma)


class DomainDecoder(nn.Module):
    """Reshape the latent to a small spatial grid, upsample through four
    stride-2 deconvolutions, finish with a sigmoid 1x1 convolution."""

    def __init__(self, resolution, input_dim, width_div=1, out_channels=3):
        super().__init__()
        if resolution % 16 != 0:
            raise ValueError(f"resolution {resolution} not divisible by 16")
        self.entry = resolution // 16
        if input_dim % (self.entry * self.entry) != 0:
            raise ValueError(
                f"latent size {input_dim} not divisible by {self.entry}x{self.entry}")
        self.entry_channels = input_dim // (self.entry * self.entry)
        widths = [scaled(c, width_div) for c in DECODER_WIDTHS]
        rows = {}
        prev = self.entry_channels
        for label, c in zip(("2-b", "2-c", "2-d", "2-e"), widths):
            rows[label] = deconv2d(prev, c, 4)
            prev = c
        rows["2-f"] = nn.Conv2d(prev, out_channels, 1)
        self.rows = nn.ModuleDict(rows)
        self.input_dim = input_dim

    def forward(self, v, trace=None):
        if v.shape[-1] != self.input_dim:
            raise ValueError(f"decoder expects latent size {self.input_dim}, "
                             f"got {v.shape[-1]}")
        n = v.shape[0]
        # channels-last reshape of the latent vector, then to NCHW
        x = v.view(n, self.entry, self.entry, self.entry_channels).permute(0, 3, 1, 2)
        if trace is not None:
            trace["2-a"] = (n, self.entry, self.entry, self.entry_channels)
        for label in ("2-b", "2-c", "2-d", "2-e"):
            x = F.relu(self.rows[label](x))
            if trace is not None:
                trace[label] = nhwc_shape(x)
        x = torch.sigmoid(self.rows["2-f"](x))
        if trace is not None:
            trace["2-f"] = nhwc_shape(x)
        return x


class LatentClassifier(nn.Module):
    """Probability that a latent vector came from the N(0, I) prior."""

    def __init__(self, input_dim):
        super().__init__()
        self.rows = nn.ModuleDict({
            "fc1": nn.Linear(input_dim, 256),
            "fc2": nn.Linear(256, 128),
            "fc3": nn.Linear(128, 1),
        })
        self.input_dim = input_dim

    def forward(self, v):
        squeeze = v.dim() == 1
        if squeeze:
            v = v[None, :]
        h = F.leaky_relu(self.rows["fc1"](v), LEAKY_SLOPE)
        h = F.leaky_relu(self.rows["fc2"](h), LEAKY_SLOPE)
        p = torch.sigmoid(self.rows["fc3"](h))
        return p[0, 0] if squeeze else p


def reparameterize(g: GaussianParams, rng: torch.Generator):
    """Sample z = mu + sigma * eps with eps ~ N(0, I); differentiable in both
    mu and sigma, exact z = mu when sigma is zero."""
    eps = torch.randn(g.mu.shape, generator=rng, dtype=g.mu.dtype, device=g.mu.device)
    return g.mu + g.sigma * eps


class DomainEmbeddingNet(nn.Module):
    """Everything latent-side: both encoders, the three decoders, and the two
    prior classifiers (one per latent length). No weight sharing anywhere."""

    def __init__(self, resolution=256, width_div=1, latent_dim=256):
        super().__init__()
        self.face_enc = DomainEncoder(resolution, width_div, latent_dim)
        self.landmark_enc = DomainEncoder(resolution, width_div, latent_dim)
        self.mask_dec = DomainDecoder(resolution, 2 * latent_dim, width_div)
        self.part_dec = DomainDecoder(resolution, 2 * latent_dim, width_div)
        self.landmark_dec = DomainDecoder(resolution, latent_dim, width_div)
        self.classifier_single = LatentClassifier(latent_dim)
        self.classifier_joint = LatentClassifier(2 * latent_dim)
        self.resolution = resolution
        self.latent_dim = latent_dim

    def encode_face_region(self, x_crop, trace=None):
        return self.face_enc(x_crop, trace)

    def encode_landmark(self, x_crop, trace=None):
        return self.landmark_enc(x_crop, trace)

    def decode_domains(self, v_latent, v_l, trace=None):
        """(x_m', x_f', x_l') decoded from the joint latent and the landmark
        latent respectively."""
        t_m = {} if trace is not None else None
        x_m = self.mask_dec(v_latent, t_m)
        x_f = self.part_dec(v_latent)
        x_l = self.landmark_dec(v_l)
        if trace is not None:
            trace.update(t_m)
        return x_m, x_f, x_l

    def latent_classify(self, v):
        dim = v.shape[-1]
        if dim == self.latent_dim:
            return self.classifier_single(v)
        if dim == 2 * self.latent_dim:
            return self.classifier_joint(v)
        raise ValueError(f"no classifier for latent length {dim}")

    def vae_parameters(self):
        """Encoder + decoder parameters (the classifiers train separately)."""
        for net in (self.face_enc, self.landmark_enc, self.mask_dec,
                    self.part_dec, self.landmark_dec):
            yield from net.parameters()

    def classifier_parameters(self):
        yield from self.classifier_single.parameters()
        yield from self.classifier_joint.parameters()


def binary_cross_entropy(pred, target):
    """Mean per-element BCE with the prediction clamped away from {0, 1}."""
    pred = torch.clamp(pred, EPS, 1.0 - EPS)
    return -(target * torch.log(pred) + (1.0 - target) * torch.log(1.0 - pred)).mean()


def domain_reconstruction_losses(x_m_hat, x_f_hat, x_l_hat, x_m, x_f, x_l):
    """Mask and landmark reconstructions score mean BCE, the face part scores
    mean L1. Any NaN input is rejected."""
    for name, t in (("x_m'", x_m_hat), ("x_f'", x_f_hat), ("x_l'", x_l_hat)):
        if not torch.isfinite(t).all():
            raise FloatingPointError(f"non-finite values in {name}")
    l_m = binary_cross_entropy(x_m_hat, x_m)
    l_f = torch.abs(x_f - x_f_hat).mean()
    l_l = binary_cross_entropy(x_l_hat, x_l)
    return l_m, l_f, l_l


def latent_prior_loss(classifier, v_prior, v_encoded):
    """Classifier loss for one latent family: push prior samples toward 1 and
    encoded samples toward 0."""
    return (-clamped_log(classifier(v_prior)).mean()
            - clamped_log(1.0 - classifier(v_encoded)).mean())


def latent_losses(net: DomainEmbeddingNet, v_f, v_l, v_latent, rng):
    """The three classifier losses, each against a fresh prior draw of the
    matching length."""
    prior_f = torch.randn(v_f.shape, generator=rng, dtype=v_f.dtype)
    prior_l = torch.randn(v_l.shape, generator=rng, dtype=v_l.dtype)
    prior_m = torch.randn(v_latent.shape, generator=rng, dtype=v_latent.dtype)
    l_f = latent_prior_loss(net.latent_classify, prior_f, v_f)
    l_l = latent_prior_loss(net.latent_classify, prior_l, v_l)
    l_m = latent_prior_loss(net.latent_classify, prior_m, v_latent)
    return l_f, l_l, l_m


def encoder_prior_terms(net: DomainEmbeddingNet, v_f, v_l, v_latent):
    """Non-saturating encoder-side objective: make encoded latents look like
    prior samples to the (frozen) classifiers."""
    g_f = -clamped_log(net.latent_classify(v_f)).mean()
    g_l = -clamped_log(net.latent_classify(v_l)).mean()
    g_m = -clamped_log(net.latent_classify(v_latent)).mean()
    return g_f, g_l, g_m
