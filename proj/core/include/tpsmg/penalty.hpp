#pragma once

namespace tpsmg
{

/**
 * Edge-wise interior penalty parameter
 *   gamma_e = penalty_hat * k (k + 1) * (1 / h_plus + 1 / h_minus),
 * where h_plus and h_minus are the extents of the two adjacent cells
 * orthogonal to the face. Boundary faces pass h_plus = h_minus = h.
 */
double penalty(double penalty_hat, int degree, double h_plus, double h_minus);

/**
 * Interior faces average traces with weight 1/sqrt(2) each, so the penalty
 * term couples jumps with half the face parameter; boundary faces use the
 * full trace. This returns the resulting coefficient of u·v on the face.
 */
inline double face_penalty_weight(bool at_boundary)
{
  return at_boundary ? 1.0 : 0.5;
}

} // namespace tpsmg
