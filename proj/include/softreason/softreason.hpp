#ifndef SOFTREASON_SOFTREASON_HPP
#define SOFTREASON_SOFTREASON_HPP

#include "softreason/errors.hpp"
#include "softreason/random.hpp"
#include "softreason/gp_surrogate.hpp"
#include "softreason/acquisition.hpp"
#include "softreason/latent_space.hpp"
#include "softreason/answers.hpp"
#include "softreason/backend.hpp"
#include "softreason/synthetic_backend.hpp"
#include "softreason/http_backend.hpp"
#include "softreason/scoring.hpp"
#include "softreason/optimizer.hpp"
#include "softreason/run_log.hpp"
#include "softreason/harness.hpp"
#include "softreason/config.hpp"

#endif // SOFTREASON_SOFTREASON_HPP
