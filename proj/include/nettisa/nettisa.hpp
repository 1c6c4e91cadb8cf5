#pragma once

#include "nettisa/bench.hpp"
#include "nettisa/config.hpp"
#include "nettisa/enhance.hpp"
#include "nettisa/flow_key.hpp"
#include "nettisa/flow_table.hpp"
#include "nettisa/nettisa_state.hpp"
#include "nettisa/oracle.hpp"
#include "nettisa/packet.hpp"
#include "nettisa/pcap.hpp"
#include "nettisa/pcap_writer.hpp"
#include "nettisa/pipeline.hpp"
#include "nettisa/record_io.hpp"
#include "nettisa/splt.hpp"
#include "nettisa/synth.hpp"
