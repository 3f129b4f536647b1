"""
Sampling orthogonal weight matrices
===================================

Draw each weight ensemble, look at its orthogonality residual and check
that the QR route and the inverse-square-root route agree in law.
"""

import numpy as np
from scipy import stats

from orthokernel import MatrixShape, sample, sample_suo, sample_suo_reference

# A wide SUO matrix has orthonormal rows; a tall one is scaled so that
# columns have squared norm m/k, matching Gaussian fan-in.
wide = sample_suo(MatrixShape(4, 16), seed=7)
tall = sample_suo(MatrixShape(16, 4), seed=7)
print("wide W W^T - I:", np.linalg.norm(wide.data @ wide.data.T - np.eye(4)))
print("tall W^T W / 4 - I:", np.linalg.norm(tall.data.T @ tall.data / 4 - np.eye(4)))

# The two halves of O(n): SO has det +1, SOMinus det -1.
for scheme in ("haar_o", "haar_so", "haar_so_minus"):
    dets = [sample(scheme, MatrixShape(5, 5), (1, i)).det() for i in range(8)]
    print(f"{scheme:14s}", np.round(dets, 12))

# The same seed always gives the same bytes.
a = sample_suo(MatrixShape(3, 3), seed=42).to_bytes()
b = sample_suo(MatrixShape(3, 3), seed=42).to_bytes()
print("bit identical:", a == b)

# Two constructions of the same distribution.
qr = [sample_suo(MatrixShape(3, 3), (5, i)).data[0, 0] for i in range(5000)]
ref = [sample_suo_reference(MatrixShape(3, 3), (6, i)).data[0, 0] for i in range(5000)]
print("KS p-value, entry [0, 0]:", stats.ks_2samp(qr, ref).pvalue)
