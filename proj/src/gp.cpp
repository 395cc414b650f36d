#include "ivca/gp.hpp"

namespace ivca {

template class GaussianProcess<double>;

} // namespace ivca
