#include "freqseg/metrics/overlap.hpp"

#include "freqseg/error.hpp"

namespace freqseg {

double dice_coefficient(const Mask& pred, const Mask& target, std::uint8_t label) {
    if (pred.extents() != target.extents())
        throw ShapeError("dice_coefficient: extents " + extents_to_string(pred.extents()) +
                         " vs " + extents_to_string(target.extents()));
    std::size_t a = 0, b = 0, both = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] == label;
        const bool t = target[i] == label;
        a += p;
        b += t;
        both += p && t;
    }
    if (a + b == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(a + b);
}

Mask threshold_mask(const Volume& prob, double threshold, std::uint8_t label) {
    Mask m(prob.extents());
    for (std::size_t i = 0; i < prob.size(); ++i)
        if (prob[i] >= threshold) m.labels()[i] = label;
    return m;
}

}  // namespace freqseg
