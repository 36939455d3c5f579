#include <immintrin.h>

#include "kernel_common.hpp"

namespace rainsim::kernels {

void integrate_clusters_avx2(ClusterKinematics& k, const DynamicsStep& s, int substeps) {
  const std::size_t n = k.size();
  const std::size_t vec_end = n - n % 4;

  const __m256d wx = _mm256_set1_pd(s.wx), wy = _mm256_set1_pd(s.wy), wz = _mm256_set1_pd(s.wz);
  const __m256d gx = _mm256_set1_pd(s.gx), gy = _mm256_set1_pd(s.gy), gz = _mm256_set1_pd(s.gz);
  const __m256d h = _mm256_set1_pd(s.h);
  const __m256d half_h = _mm256_set1_pd(0.5 * s.h);
  const __m256d drag = _mm256_set1_pd(s.drag_k);
  const __m256d decay = _mm256_set1_pd(s.lateral_decay);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d one = _mm256_set1_pd(1.0);

  for (int step = 0; step < substeps; ++step) {
    for (std::size_t i = 0; i < vec_end; i += 4) {
      const __m256d pending = _mm256_loadu_pd(&k.pending[i]);
      const __m256d waiting = _mm256_cmp_pd(pending, half, _CMP_GT_OQ);
      _mm256_storeu_pd(&k.pending[i],
                       _mm256_blendv_pd(pending, _mm256_sub_pd(pending, one), waiting));
      if (_mm256_movemask_pd(waiting) == 0xF) continue;

      const __m256d vx = _mm256_loadu_pd(&k.vx[i]);
      const __m256d vy = _mm256_loadu_pd(&k.vy[i]);
      const __m256d vz = _mm256_loadu_pd(&k.vz[i]);
      const __m256d rx = _mm256_sub_pd(wx, vx);
      const __m256d ry = _mm256_sub_pd(wy, vy);
      const __m256d rz = _mm256_sub_pd(wz, vz);
      const __m256d sq = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(rx, rx), _mm256_mul_pd(ry, ry)),
                                       _mm256_mul_pd(rz, rz));
      const __m256d ks = _mm256_mul_pd(drag, _mm256_sqrt_pd(sq));
      const __m256d ax = _mm256_add_pd(gx, _mm256_mul_pd(ks, rx));
      const __m256d ay = _mm256_add_pd(gy, _mm256_mul_pd(ks, ry));
      const __m256d az = _mm256_add_pd(gz, _mm256_mul_pd(ks, rz));
      const __m256d nvx = _mm256_add_pd(vx, _mm256_mul_pd(ax, h));
      const __m256d nvy = _mm256_add_pd(vy, _mm256_mul_pd(ay, h));
      const __m256d nvz = _mm256_add_pd(vz, _mm256_mul_pd(az, h));
      const __m256d lx = _mm256_loadu_pd(&k.lx[i]);
      const __m256d ly = _mm256_loadu_pd(&k.ly[i]);
      const __m256d lz = _mm256_loadu_pd(&k.lz[i]);
      const __m256d nlx = _mm256_mul_pd(lx, decay);
      const __m256d nly = _mm256_mul_pd(ly, decay);
      const __m256d nlz = _mm256_mul_pd(lz, decay);
      const __m256d px = _mm256_loadu_pd(&k.px[i]);
      const __m256d py = _mm256_loadu_pd(&k.py[i]);
      const __m256d pz = _mm256_loadu_pd(&k.pz[i]);
      const __m256d npx = _mm256_add_pd(
          _mm256_add_pd(px, _mm256_mul_pd(_mm256_add_pd(vx, nvx), half_h)), _mm256_mul_pd(nlx, h));
      const __m256d npy = _mm256_add_pd(
          _mm256_add_pd(py, _mm256_mul_pd(_mm256_add_pd(vy, nvy), half_h)), _mm256_mul_pd(nly, h));
      const __m256d npz = _mm256_add_pd(
          _mm256_add_pd(pz, _mm256_mul_pd(_mm256_add_pd(vz, nvz), half_h)), _mm256_mul_pd(nlz, h));
      const __m256d age = _mm256_loadu_pd(&k.age[i]);

      // Waiting lanes keep their old state.
      _mm256_storeu_pd(&k.px[i], _mm256_blendv_pd(npx, px, waiting));
      _mm256_storeu_pd(&k.py[i], _mm256_blendv_pd(npy, py, waiting));
      _mm256_storeu_pd(&k.pz[i], _mm256_blendv_pd(npz, pz, waiting));
      _mm256_storeu_pd(&k.vx[i], _mm256_blendv_pd(nvx, vx, waiting));
      _mm256_storeu_pd(&k.vy[i], _mm256_blendv_pd(nvy, vy, waiting));
      _mm256_storeu_pd(&k.vz[i], _mm256_blendv_pd(nvz, vz, waiting));
      _mm256_storeu_pd(&k.lx[i], _mm256_blendv_pd(nlx, lx, waiting));
      _mm256_storeu_pd(&k.ly[i], _mm256_blendv_pd(nly, ly, waiting));
      _mm256_storeu_pd(&k.lz[i], _mm256_blendv_pd(nlz, lz, waiting));
      _mm256_storeu_pd(&k.age[i], _mm256_blendv_pd(_mm256_add_pd(age, h), age, waiting));
    }
    integrate_range_scalar(k, s, vec_end, n);
  }
}

void nearest_box_entry_avx2(double ox, double oy, double oz, RaySoA rays,
                            const OrientedBoxes& boxes, std::span<double> t_out,
                            std::span<std::int32_t> index_out) {
  const std::size_t n = rays.dx.size();
  const std::size_t vec_end = n - n % 4;
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);

  for (std::size_t b = 0; b < boxes.size(); ++b) {
    const BoxFrame f = box_frame(ox, oy, oz, boxes, b);
    const __m256d c = _mm256_set1_pd(f.c), s = _mm256_set1_pd(f.s);
    const __m256d lo_x = _mm256_set1_pd(f.lo_x - f.ox), hi_x = _mm256_set1_pd(f.hi_x - f.ox);
    const __m256d lo_y = _mm256_set1_pd(f.lo_y - f.oy), hi_y = _mm256_set1_pd(f.hi_y - f.oy);
    const __m256d lo_z = _mm256_set1_pd(f.lo_z - f.oz), hi_z = _mm256_set1_pd(f.hi_z - f.oz);
    const __m128i box_index = _mm_set1_epi32(static_cast<int>(b));

    for (std::size_t i = 0; i < vec_end; i += 4) {
      const __m256d dx = _mm256_loadu_pd(&rays.dx[i]);
      const __m256d dy = _mm256_loadu_pd(&rays.dy[i]);
      const __m256d lx = _mm256_add_pd(_mm256_mul_pd(c, dx), _mm256_mul_pd(s, dy));
      const __m256d ly = _mm256_sub_pd(_mm256_mul_pd(c, dy), _mm256_mul_pd(s, dx));
      const __m256d lz = _mm256_loadu_pd(&rays.dz[i]);
      const __m256d ix = _mm256_div_pd(one, lx);
      const __m256d iy = _mm256_div_pd(one, ly);
      const __m256d iz = _mm256_div_pd(one, lz);
      const __m256d ax = _mm256_mul_pd(lo_x, ix), bx = _mm256_mul_pd(hi_x, ix);
      const __m256d ay = _mm256_mul_pd(lo_y, iy), by = _mm256_mul_pd(hi_y, iy);
      const __m256d az = _mm256_mul_pd(lo_z, iz), bz = _mm256_mul_pd(hi_z, iz);
      const __m256d tmin = _mm256_max_pd(
          _mm256_max_pd(_mm256_min_pd(ax, bx), _mm256_min_pd(ay, by)), _mm256_min_pd(az, bz));
      const __m256d tmax = _mm256_min_pd(
          _mm256_min_pd(_mm256_max_pd(ax, bx), _mm256_max_pd(ay, by)), _mm256_max_pd(az, bz));
      const __m256d best = _mm256_loadu_pd(&t_out[i]);
      const __m256d take = _mm256_and_pd(
          _mm256_and_pd(_mm256_cmp_pd(tmin, tmax, _CMP_LE_OQ), _mm256_cmp_pd(tmin, zero, _CMP_GT_OQ)),
          _mm256_cmp_pd(tmin, best, _CMP_LT_OQ));
      const int mask = _mm256_movemask_pd(take);
      if (mask == 0) continue;
      _mm256_storeu_pd(&t_out[i], _mm256_blendv_pd(best, tmin, take));
      // 64-bit lane mask -> 32-bit lane mask for the index blend.
      const __m128i take32 = _mm256_cvtpd_epi32(_mm256_and_pd(take, one));
      const __m128i prev = _mm_loadu_si128(reinterpret_cast<const __m128i*>(&index_out[i]));
      const __m128i sel = _mm_cmpeq_epi32(take32, _mm_set1_epi32(1));
      _mm_storeu_si128(reinterpret_cast<__m128i*>(&index_out[i]),
                       _mm_blendv_epi8(prev, box_index, sel));
    }
  }
  box_entry_range_scalar(ox, oy, oz, rays, boxes, t_out, index_out, vec_end, n);
}

}  // namespace rainsim::kernels
