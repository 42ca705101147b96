#pragma once

#include <complex>
#include <cstdint>
#include <iomanip>
#include <random>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "qpragma/diagnostics.hpp"
#include "qpragma/qir.hpp"

namespace qpragma {

using cplx = std::complex<double>;

/// Uniform double in [0, 1) from the top 53 bits of one mt19937_64 draw.
/// Fixed here (rather than via std::uniform_real_distribution) so histograms
/// are bit-for-bit reproducible across standard library implementations.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

/// Dense statevector over the currently live qubits. Qubit addresses are
/// stable handles assigned by the runtime; the backend maps each live address
/// to a bit position (position k has weight 2^k in the amplitude index).
class StateVector {
public:
    explicit StateVector(unsigned max_qubits = 24) : max_qubits_(max_qubits) {
        amp_.assign(1, cplx{1.0, 0.0});
    }

    unsigned live_qubits() const { return static_cast<unsigned>(addr_of_pos_.size()); }

    /// Append `addrs` as fresh |0⟩ qubits.
    void alloc(const std::vector<std::uint32_t>& addrs) {
        if (live_qubits() + addrs.size() > max_qubits_)
            throw ExecError("qubit budget exceeded: " +
                            std::to_string(live_qubits() + addrs.size()) + " > max " +
                            std::to_string(max_qubits_));
        for (auto a : addrs) {
            if (pos_of_addr_.count(a)) throw ExecError("qubit address already live");
            pos_of_addr_[a] = static_cast<int>(addr_of_pos_.size());
            addr_of_pos_.push_back(a);
        }
        amp_.resize(std::size_t{1} << live_qubits(), cplx{0.0, 0.0});
    }

    /// Release qubits. Returns the all-zero probability mass they carried
    /// before release (1.0 means the release was exact). Qubits not in |0⟩
    /// are projected onto a sampled measurement value first.
    double release(const std::vector<std::uint32_t>& addrs, std::mt19937_64& rng) {
        double p_zero = overlap_zero(addrs);
        for (auto a : addrs) {
            int p = pos(a);
            if (prob_one(p) > 1e-15) {
                int bit = uniform01(rng) < prob_one(p) ? 1 : 0;
                project(p, bit);
                if (bit) flip(p);  // renormalized |0⟩ so removal is well-defined
            }
            remove_qubit(p);
        }
        return p_zero;
    }

    void apply(const QInstr& instr) {
        if (instr.op == QOp::perm) {
            apply_perm(instr);
            return;
        }
        if (instr.op != QOp::gate) throw ExecError("backend: not an applicable instruction");
        std::uint64_t cmask = ctrl_mask(instr.ctrls);
        check_distinct(instr);
        switch (instr.g) {
            case Gate::CNOT:
                apply_1q_matrix(pos(instr.targets[1]),
                                cmask | (std::uint64_t{1} << pos(instr.targets[0])),
                                mat_x());
                return;
            case Gate::CCNOT:
                apply_1q_matrix(pos(instr.targets[2]),
                                cmask | (std::uint64_t{1} << pos(instr.targets[0])) |
                                    (std::uint64_t{1} << pos(instr.targets[1])),
                                mat_x());
                return;
            case Gate::SWAP:
                apply_swap(pos(instr.targets[0]), pos(instr.targets[1]), cmask);
                return;
            default:
                break;
        }
        apply_1q_matrix(pos(instr.targets[0]), cmask, gate_matrix(instr.g, instr.angle, instr.dag));
    }

    /// Z-basis measurement of `addrs` (in order); collapses the state.
    /// Returns bits[i] for addrs[i].
    std::vector<int> measure(const std::vector<std::uint32_t>& addrs, std::mt19937_64& rng) {
        std::vector<int> bits;
        bits.reserve(addrs.size());
        for (auto a : addrs) {
            int p = pos(a);
            double p1 = prob_one(p);
            int bit = uniform01(rng) < p1 ? 1 : 0;
            project(p, bit);
            bits.push_back(bit);
        }
        return bits;
    }

    /// Probability of the all-zeros outcome on `addrs`; no state change.
    double overlap_zero(const std::vector<std::uint32_t>& addrs) const {
        std::uint64_t mask = 0;
        for (auto a : addrs) mask |= std::uint64_t{1} << pos(a);
        double p = 0;
        for (std::size_t i = 0; i < amp_.size(); ++i)
            if ((i & mask) == 0) p += std::norm(amp_[i]);
        return p;
    }

    void flip_addr(std::uint32_t a) { flip(pos(a)); }

    double norm2() const {
        double s = 0;
        for (const auto& a : amp_) s += std::norm(a);
        return s;
    }

    /// Amplitude of the basis state where address addrs[i] carries bit i of v
    /// and all other live qubits are 0.
    cplx amplitude(const std::vector<std::uint32_t>& addrs, std::uint64_t v) const {
        std::uint64_t idx = 0;
        for (std::size_t i = 0; i < addrs.size(); ++i)
            if ((v >> i) & 1) idx |= std::uint64_t{1} << pos(addrs[i]);
        return amp_[idx];
    }

    /// Debug dump: rows "bits re im", index bitstring MSB-left, ascending.
    std::string dump() const {
        std::ostringstream os;
        os << std::fixed << std::setprecision(10);
        unsigned n = live_qubits();
        for (std::size_t i = 0; i < amp_.size(); ++i) {
            std::string bits;
            for (int b = static_cast<int>(n) - 1; b >= 0; --b)
                bits += ((i >> b) & 1) ? '1' : '0';
            os << bits << " " << amp_[i].real() << " " << amp_[i].imag() << "\n";
        }
        return os.str();
    }

private:
    unsigned max_qubits_;
    std::vector<cplx> amp_;
    std::vector<std::uint32_t> addr_of_pos_;
    std::unordered_map<std::uint32_t, int> pos_of_addr_;

    int pos(std::uint32_t addr) const {
        auto it = pos_of_addr_.find(addr);
        if (it == pos_of_addr_.end())
            throw ExecError("qubit address " + std::to_string(addr) + " is not live");
        return it->second;
    }

    void check_distinct(const QInstr& i) const {
        std::uint64_t seen = 0;
        auto mark = [&](std::uint32_t a) {
            std::uint64_t bit = std::uint64_t{1} << pos(a);
            if (seen & bit) throw ExecError("duplicate qubit address within one instruction");
            seen |= bit;
        };
        for (auto a : i.targets) mark(a);
        for (auto a : i.ctrls) mark(a);
    }

    std::uint64_t ctrl_mask(const std::vector<std::uint32_t>& ctrls) const {
        std::uint64_t m = 0;
        for (auto c : ctrls) m |= std::uint64_t{1} << pos(c);
        return m;
    }

    struct Mat2 {
        cplx a, b, c, d;  // [[a, b], [c, d]]
        bool diagonal() const { return std::norm(b) == 0.0 && std::norm(c) == 0.0; }
    };

    static Mat2 mat_x() { return {0, 1, 1, 0}; }

    static Mat2 gate_matrix(Gate g, double angle, bool dag) {
        const double h = 0.70710678118654752440;
        const cplx i1{0, 1};
        Mat2 m;
        switch (g) {
            case Gate::I: m = {1, 0, 0, 1}; break;
            case Gate::X: m = mat_x(); break;
            case Gate::Y: m = {0, -i1, i1, 0}; break;
            case Gate::Z: m = {1, 0, 0, -1}; break;
            case Gate::H: m = {h, h, h, -h}; break;
            case Gate::S: m = {1, 0, 0, i1}; break;
            case Gate::T: m = {1, 0, 0, std::polar(1.0, 0.78539816339744830962)}; break;
            case Gate::RX: {
                double c = std::cos(angle / 2), s = std::sin(angle / 2);
                m = {c, -i1 * s, -i1 * s, c};
                break;
            }
            case Gate::RY: {
                double c = std::cos(angle / 2), s = std::sin(angle / 2);
                m = {c, -s, s, c};
                break;
            }
            case Gate::RZ:
                m = {std::polar(1.0, -angle / 2), 0, 0, std::polar(1.0, angle / 2)};
                break;
            case Gate::PH:
                m = {1, 0, 0, std::polar(1.0, angle)};
                break;
            default:
                throw ExecError("unknown single-qubit gate");
        }
        if (dag) {
            Mat2 adj{std::conj(m.a), std::conj(m.c), std::conj(m.b), std::conj(m.d)};
            m = adj;
        }
        return m;
    }

    void apply_1q_matrix(int target, std::uint64_t cmask, const Mat2& m) {
        const std::uint64_t tbit = std::uint64_t{1} << target;
        if (cmask & tbit) throw ExecError("control qubit overlaps the target qubit");
        if (m.diagonal()) {
            for (std::size_t i = 0; i < amp_.size(); ++i) {
                if ((i & cmask) != cmask) continue;
                amp_[i] *= (i & tbit) ? m.d : m.a;
            }
            return;
        }
        for (std::size_t i = 0; i < amp_.size(); ++i) {
            if ((i & tbit) || (i & cmask) != cmask) continue;
            const std::size_t j = i | tbit;
            const cplx a0 = amp_[i], a1 = amp_[j];
            amp_[i] = m.a * a0 + m.b * a1;
            amp_[j] = m.c * a0 + m.d * a1;
        }
    }

    void apply_swap(int p0, int p1, std::uint64_t cmask) {
        const std::uint64_t b0 = std::uint64_t{1} << p0, b1 = std::uint64_t{1} << p1;
        if ((cmask & b0) || (cmask & b1))
            throw ExecError("control qubit overlaps the target qubit");
        for (std::size_t i = 0; i < amp_.size(); ++i) {
            if ((i & cmask) != cmask) continue;
            if ((i & b0) && !(i & b1)) std::swap(amp_[i], amp_[(i & ~b0) | b1]);
        }
    }

    void apply_perm(const QInstr& instr) {
        check_distinct(instr);
        const std::uint64_t cmask = ctrl_mask(instr.ctrls);
        const unsigned w = static_cast<unsigned>(instr.targets.size());
        std::vector<int> tpos(w);
        std::uint64_t tmask = 0;
        for (unsigned k = 0; k < w; ++k) {
            tpos[k] = pos(instr.targets[k]);
            tmask |= std::uint64_t{1} << tpos[k];
        }
        if (cmask & tmask) throw ExecError("control qubit overlaps the target qubit");
        std::vector<cplx> out(amp_.size());
        for (std::size_t i = 0; i < amp_.size(); ++i) {
            if ((i & cmask) != cmask) {
                out[i] += amp_[i];
                continue;
            }
            std::uint64_t v = 0;
            for (unsigned k = 0; k < w; ++k)
                if (i & (std::uint64_t{1} << tpos[k])) v |= std::uint64_t{1} << k;
            const std::uint64_t u = perm_apply(instr.perm, v, w, instr.dag);
            std::size_t j = i & ~tmask;
            for (unsigned k = 0; k < w; ++k)
                if ((u >> k) & 1) j |= std::uint64_t{1} << tpos[k];
            out[j] += amp_[i];
        }
        amp_ = std::move(out);
    }

    double prob_one(int p) const {
        const std::uint64_t bit = std::uint64_t{1} << p;
        double s = 0;
        for (std::size_t i = 0; i < amp_.size(); ++i)
            if (i & bit) s += std::norm(amp_[i]);
        return s;
    }

    void project(int p, int bit) {
        const std::uint64_t b = std::uint64_t{1} << p;
        double keep = 0;
        for (std::size_t i = 0; i < amp_.size(); ++i) {
            if (static_cast<int>((i & b) != 0) != bit)
                amp_[i] = 0;
            else
                keep += std::norm(amp_[i]);
        }
        if (keep <= 0) throw ExecError("measurement projected onto a zero-probability outcome");
        const double scale = 1.0 / std::sqrt(keep);
        for (auto& a : amp_) a *= scale;
    }

    void flip(int p) {
        const std::uint64_t b = std::uint64_t{1} << p;
        for (std::size_t i = 0; i < amp_.size(); ++i)
            if (!(i & b)) std::swap(amp_[i], amp_[i | b]);
    }

    /// Remove a qubit known to be |0⟩ (exactly, post-projection).
    void remove_qubit(int p) {
        const unsigned n = live_qubits();
        const std::uint64_t low = (std::uint64_t{1} << p) - 1;
        std::vector<cplx> out(std::size_t{1} << (n - 1));
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = amp_[(i & low) | ((i & ~low) << 1)];
        amp_ = std::move(out);
        // compact the address maps
        std::uint32_t gone = addr_of_pos_[p];
        addr_of_pos_.erase(addr_of_pos_.begin() + p);
        pos_of_addr_.erase(gone);
        for (auto& [addr, q] : pos_of_addr_)
            if (q > p) --q;
    }
};

}  // namespace qpragma
