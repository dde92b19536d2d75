#!/usr/bin/env python3
"""Reference SSIM computation used to freeze expected values for the C++
tests. Implements mean SSIM with an 11x11 Gaussian window (sigma 1.5),
C1=(0.01*255)^2, C2=(0.03*255)^2, valid-window positions only, float64.

Cross-checked against skimage.metrics.structural_similarity with
gaussian_weights=True, sigma=1.5, use_sample_covariance=False.
"""

import numpy as np


def gaussian_kernel(radius=5, sigma=1.5):
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(xs ** 2) / (2 * sigma * sigma))
    return k / k.sum()


def filt_valid(img, k):
    # separable valid correlation, rows then columns
    r = len(k) // 2
    h, w = img.shape
    tmp = np.zeros((h, w - 2 * r))
    for i in range(w - 2 * r):
        tmp[:, i] = img[:, i:i + 2 * r + 1] @ k
    out = np.zeros((h - 2 * r, w - 2 * r))
    for i in range(h - 2 * r):
        out[i, :] = k @ tmp[i:i + 2 * r + 1, :]
    return out


def ssim(a, b):
    a = a.astype(np.float64)
    b = b.astype(np.float64)
    k = gaussian_kernel()
    c1 = (0.01 * 255) ** 2
    c2 = (0.03 * 255) ** 2
    mu_a = filt_valid(a, k)
    mu_b = filt_valid(b, k)
    e_aa = filt_valid(a * a, k)
    e_bb = filt_valid(b * b, k)
    e_ab = filt_valid(a * b, k)
    var_a = e_aa - mu_a * mu_a
    var_b = e_bb - mu_b * mu_b
    cov = e_ab - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def pattern_a(w, h):
    img = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            img[y, x] = (x * 7 + y * 13 + (x * y) % 31) % 256
    return img


def pattern_b(w, h):
    img = np.zeros((h, w), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            img[y, x] = (x * 5 + y * 11 + ((x + y) * 3) % 17) % 256
    return img


if __name__ == "__main__":
    a = pattern_a(32, 24)
    b = pattern_b(32, 24)
    neg = (255 - a).astype(np.uint8)
    print("ssim(pattern_a, pattern_b) =", repr(ssim(a, b)))
    print("ssim(pattern_a, 255-pattern_a) =", repr(ssim(a, neg)))
    print("ssim(pattern_a, pattern_a) =", repr(ssim(a, a)))

    try:
        from skimage.metrics import structural_similarity as sk_ssim
        v = sk_ssim(a, b, win_size=11, gaussian_weights=True, sigma=1.5,
                    use_sample_covariance=False, data_range=255)
        print("skimage cross-check (a,b) =", repr(v))
        v2 = sk_ssim(a, neg, win_size=11, gaussian_weights=True, sigma=1.5,
                     use_sample_covariance=False, data_range=255)
        print("skimage cross-check (a,neg) =", repr(v2))
    except ImportError:
        print("skimage not available; skipping cross-check")
